use infospec::ann::{init_network, MlpTopology};
use infospec::fit::{fit_apply, fit_train, FitParams};
use infospec::io;
use infospec::synth::{gen_library, VariationConfig};
use infospec::{ClassMultiplicities, PpmGrid, SpectrumLibrary};

fn library() -> SpectrumLibrary {
    let g = PpmGrid::new(1.0, 5.5, 300).unwrap();
    gen_library(3, &ClassMultiplicities::new(vec![2, 1, 3]).unwrap(), &VariationConfig::default(), &g, 8).unwrap()
}

#[test]
fn library_survives_json() {
    let lib = library();
    let text = io::library_to_json(&lib).unwrap();
    assert_eq!(io::library_from_json(&text).unwrap(), lib);
}

#[test]
fn model_survives_json() {
    let lib = library();
    let model = fit_train(&lib, &FitParams::default()).unwrap();
    let back = io::model_from_json(&io::model_to_json(&model).unwrap()).unwrap();
    assert_eq!(back, model);
    let s = &lib.entries()[0].spectrum;
    assert_eq!(fit_apply(&back, s).unwrap(), fit_apply(&model, s).unwrap());
}

#[test]
fn network_survives_json() {
    let net = init_network(MlpTopology::new(7, 4, 3).unwrap(), 99).unwrap();
    assert_eq!(io::network_from_json(&io::network_to_json(&net).unwrap()).unwrap(), net);
}

#[test]
fn spectra_survive_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let lib = library();
    let s = &lib.entries()[1].spectrum;
    let path = dir.path().join("s.csv");
    io::write_spectrum_csv(std::fs::File::create(&path).unwrap(), s).unwrap();
    assert_eq!(&io::read_spectrum(&path).unwrap(), s);

    let model = fit_train(&lib, &FitParams::default()).unwrap();
    let fis = fit_apply(&model, s).unwrap();
    let mut buf = Vec::new();
    io::write_information_csv(&mut buf, &fis).unwrap();
    assert_eq!(io::read_information_csv(&buf[..]).unwrap(), fis);
}
