//! File formats: spectra and information spectra as `ppm,<value>` CSV,
//! libraries, models and networks as JSON, learning curves as CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ann::{LearningCurve, MlpNetwork, MlpTopology};
use crate::error::{Error, Result};
use crate::fit::{ChannelEnvelope, ChannelHistogram, FitModel, InformationSpectrum};
use crate::spectrum::{LabeledSpectrum, PpmGrid, Spectrum, SpectrumLibrary};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const NETWORK_FORMAT_VERSION: u32 = 1;

/// 17 significant digits: lossless for f64.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_series<W: Write>(w: W, header: &str, grid: &PpmGrid, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "ppm,{header}")?;
    for (c, v) in values.iter().enumerate() {
        writeln!(w, "{},{}", format_f64(grid.ppm(c)), format_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

fn read_series<R: Read>(r: R, header: &str) -> Result<(PpmGrid, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "ppm" || &headers[1] != header {
        return Err(Error::Parse(format!("expected header 'ppm,{header}', got '{}'", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut ppm = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| {
            rec[i].parse::<f64>().map_err(|e| Error::Parse(format!("row {}: '{}': {e}", line + 1, &rec[i])))
        };
        ppm.push(parse(0)?);
        values.push(parse(1)?);
    }
    if ppm.len() < 2 {
        return Err(Error::GridTooSmall(ppm.len()));
    }
    let grid = PpmGrid::new(ppm[0], ppm[ppm.len() - 1], ppm.len())?;
    let tol = 1e-6 * grid.step().abs();
    if let Some(c) = ppm.iter().enumerate().position(|(c, &p)| (p - grid.ppm(c)).abs() > tol) {
        return Err(Error::Parse(format!("ppm column is not uniformly spaced at row {}", c + 1)));
    }
    Ok((grid, values))
}

pub fn write_spectrum_csv<W: Write>(w: W, s: &Spectrum) -> Result<()> {
    write_series(w, "intensity", s.grid(), s.intensities())
}

pub fn read_spectrum_csv<R: Read>(r: R) -> Result<Spectrum> {
    let (grid, values) = read_series(r, "intensity")?;
    Spectrum::new(grid, values)
}

pub fn write_information_csv<W: Write>(w: W, s: &InformationSpectrum) -> Result<()> {
    write_series(w, "information", &s.grid, &s.info)
}

pub fn read_information_csv<R: Read>(r: R) -> Result<InformationSpectrum> {
    let (grid, info) = read_series(r, "information")?;
    Ok(InformationSpectrum { grid, info })
}

#[derive(Serialize, Deserialize)]
struct LibraryEntryFile {
    label: String,
    intensities: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LibraryFile {
    grid: PpmGrid,
    entries: Vec<LibraryEntryFile>,
}

pub fn library_to_json(lib: &SpectrumLibrary) -> Result<String> {
    let file = LibraryFile {
        grid: *lib.grid(),
        entries: lib
            .entries()
            .iter()
            .map(|e| LibraryEntryFile { label: e.label.clone(), intensities: e.spectrum.intensities().to_vec() })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Parses and validates a library document.
pub fn library_from_json(text: &str) -> Result<SpectrumLibrary> {
    let file: LibraryFile = serde_json::from_str(text)?;
    let entries = file
        .entries
        .into_iter()
        .map(|e| Ok(LabeledSpectrum { label: e.label, spectrum: Spectrum::new(file.grid, e.intensities)? }))
        .collect::<Result<Vec<_>>>()?;
    SpectrumLibrary::validated(file.grid, entries)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    grid: PpmGrid,
    max_threshold: f64,
    n_bins: usize,
    suppress_solvent: bool,
    mins: Vec<f64>,
    maxs: Vec<f64>,
    histograms: Vec<Vec<u64>>,
}

pub fn model_to_json(m: &FitModel) -> Result<String> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        grid: *m.grid(),
        max_threshold: m.max_threshold(),
        n_bins: m.n_bins(),
        suppress_solvent: m.suppress_solvent(),
        mins: m.envelope().mins.clone(),
        maxs: m.envelope().maxs.clone(),
        histograms: m.histograms().iter().map(|h| h.counts.clone()).collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn model_from_json(text: &str) -> Result<FitModel> {
    let f: ModelFile = serde_json::from_str(text)?;
    if f.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::FormatVersion { found: f.format_version, expected: MODEL_FORMAT_VERSION });
    }
    let histograms = f
        .histograms
        .into_iter()
        .map(|counts| ChannelHistogram { total: counts.iter().sum(), counts })
        .collect();
    FitModel::from_parts(
        f.grid,
        f.max_threshold,
        f.n_bins,
        f.suppress_solvent,
        ChannelEnvelope { mins: f.mins, maxs: f.maxs },
        histograms,
    )
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    format_version: u32,
    topology: MlpTopology,
    hidden_weights: Vec<f64>,
    output_weights: Vec<f64>,
    seed: u64,
}

pub fn network_to_json(n: &MlpNetwork) -> Result<String> {
    let file = NetworkFile {
        format_version: NETWORK_FORMAT_VERSION,
        topology: *n.topology(),
        hidden_weights: n.hidden_weights().to_vec(),
        output_weights: n.output_weights().to_vec(),
        seed: n.rng_seed(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn network_from_json(text: &str) -> Result<MlpNetwork> {
    let f: NetworkFile = serde_json::from_str(text)?;
    if f.format_version != NETWORK_FORMAT_VERSION {
        return Err(Error::FormatVersion { found: f.format_version, expected: NETWORK_FORMAT_VERSION });
    }
    MlpNetwork::from_weights(f.topology, f.hidden_weights, f.output_weights, f.seed)
}

pub fn write_curve_csv<W: Write>(w: W, curve: &LearningCurve) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "epoch,max_bit_error")?;
    for (e, v) in curve.max_bit_error.iter().enumerate() {
        writeln!(w, "{},{}", e + 1, format_f64(*v))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    BufReader::new(File::open(path)?).read_to_string(&mut s)?;
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(text.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn read_library(path: &Path) -> Result<SpectrumLibrary> {
    library_from_json(&read_text(path)?)
}

pub fn read_model(path: &Path) -> Result<FitModel> {
    model_from_json(&read_text(path)?)
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    read_spectrum_csv(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_csv_layout() {
        let g = PpmGrid::new(5.5, 1.0, 3).unwrap();
        let s = Spectrum::new(g, vec![0.1, -2.0, 1e-9]).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ppm,intensity\n5.5000000000000000e0,1.0000000000000001e-1\n"));
        assert_eq!(read_spectrum_csv(&buf[..]).unwrap(), s);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(matches!(read_spectrum_csv("ppm,information\n1,2\n2,3\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_spectrum_csv("ppm,intensity\n1,2\n2,x\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_spectrum_csv("ppm,intensity\n1,2\n".as_bytes()), Err(Error::GridTooSmall(1))));
        assert!(matches!(read_spectrum_csv("ppm,intensity\n1,0\n2,0\n4,0\n".as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn library_json_shape() {
        let g = PpmGrid::new(1.0, 2.0, 2).unwrap();
        let lib = SpectrumLibrary::new(
            g,
            vec![LabeledSpectrum { label: "A".into(), spectrum: Spectrum::new(g, vec![0.5, 1.5]).unwrap() }],
        );
        let text = library_to_json(&lib).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["grid"]["n_channels"], 2);
        assert_eq!(v["entries"][0]["label"], "A");
        assert_eq!(library_from_json(&text).unwrap(), lib);

        let bad = r#"{"grid":{"start_ppm":1,"end_ppm":2,"n_channels":2},"entries":[{"label":"A","intensities":[1]}]}"#;
        assert!(matches!(library_from_json(bad), Err(Error::LengthMismatch { .. })));
        let bad_grid = r#"{"grid":{"start_ppm":1,"end_ppm":1,"n_channels":2},"entries":[]}"#;
        assert!(library_from_json(bad_grid).is_err());
    }

    #[test]
    fn model_version_is_checked() {
        let text = r#"{"format_version":9,"grid":{"start_ppm":1,"end_ppm":2,"n_channels":2},"max_threshold":0.2,"n_bins":2,"suppress_solvent":true,"mins":[0,0],"maxs":[1,1],"histograms":[[1,0],[0,1]]}"#;
        assert!(matches!(model_from_json(text), Err(Error::FormatVersion { found: 9, .. })));
        let ok = text.replace("\"format_version\":9", "\"format_version\":1");
        assert_eq!(model_from_json(&ok).unwrap().library_size(), 1);
    }
}
