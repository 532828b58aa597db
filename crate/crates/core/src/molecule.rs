//! A parsed molecule with everything the construction protocols need.

use std::path::Path;

use crate::error::{Error, Result};
use crate::integrals::{
    expand_spin_orbitals, hf_energy, hf_state_occupation, parse_fcidump, to_pauli_hamiltonian,
    MolecularIntegrals, SpinOrbitalHamiltonian,
};
use crate::selection::Problem;
use crate::simulator::Observable;

#[derive(Debug)]
pub struct Molecule {
    pub integrals: MolecularIntegrals,
    pub spin_orbitals: SpinOrbitalHamiltonian,
    pub hamiltonian: Observable,
    /// Hartree–Fock occupation bitmask.
    pub reference: u64,
}

impl Molecule {
    pub fn from_integrals(integrals: MolecularIntegrals) -> Result<Self> {
        integrals.validate()?;
        let spin_orbitals = expand_spin_orbitals(&integrals);
        let hamiltonian = Observable::new(to_pauli_hamiltonian(&spin_orbitals)?)?;
        let reference = hf_state_occupation(spin_orbitals.n_so, integrals.n_elec, integrals.ms2)?;
        Ok(Molecule {
            integrals,
            spin_orbitals,
            hamiltonian,
            reference,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_integrals(parse_fcidump(&text)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.spin_orbitals.n_so
    }

    pub fn hf_energy(&self) -> f64 {
        hf_energy(&self.spin_orbitals, self.reference)
    }

    /// Construction inputs with classical first-layer screening enabled.
    pub fn problem(&self, exact: Option<f64>) -> Problem<'_> {
        Problem {
            h: &self.hamiltonian,
            reference: self.reference,
            spin_orbitals: Some(&self.spin_orbitals),
            exact,
        }
    }
}
