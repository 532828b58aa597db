#![allow(dead_code)]

use std::path::PathBuf;

use esvqe::molecule::Molecule;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(format!(
        "{}/../../fixtures/{name}",
        env!("CARGO_MANIFEST_DIR")
    ))
}

pub fn fcidump(name: &str) -> PathBuf {
    fixture_dir(name).join("FCIDUMP")
}

pub fn molecule(name: &str) -> Molecule {
    Molecule::load(&fcidump(name)).unwrap()
}

pub fn reference(name: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(fixture_dir(name).join("reference.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn fci_energy(name: &str) -> f64 {
    reference(name)["fci_energy"].as_f64().unwrap()
}
