//! The four maximally entangled two-atom Bell states and their
//! single-atom basis correlations.
//!
//! Conventions (|g> = bit 0, |e> = bit 1, amplitude order gg, ge, eg, ee):
//!
//! ```text
//! |phi+> = (|gg> + |ee>)/sqrt(2)    |psi+> = (|ge> + |eg>)/sqrt(2)
//! |phi-> = (|gg> - |ee>)/sqrt(2)    |psi-> = (|ge> - |eg>)/sqrt(2)
//! ```
//!
//! Rewriting in the X basis |±> = (|g> ± |e>)/sqrt(2) keeps each state a
//! uniform superposition of two product outcomes, which is what the
//! protocol's correlation checks rely on: phi+ and psi+ are X-correlated
//! (++/--), phi- and psi- are X-anticorrelated (+-/-+), while in Z the
//! phi states are correlated and the psi states anticorrelated.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::quantum::{Basis, StateVector, C64};

/// One of the four two-atom Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] =
        [BellState::PhiPlus, BellState::PhiMinus, BellState::PsiPlus, BellState::PsiMinus];

    /// Amplitudes over (|gg>, |ge>, |eg>, |ee>).
    pub fn amplitudes(self) -> [C64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = |x: f64| Complex64::new(x, 0.0);
        match self {
            BellState::PhiPlus => [r(h), r(0.0), r(0.0), r(h)],
            BellState::PhiMinus => [r(h), r(0.0), r(0.0), r(-h)],
            BellState::PsiPlus => [r(0.0), r(h), r(h), r(0.0)],
            BellState::PsiMinus => [r(0.0), r(h), r(-h), r(0.0)],
        }
    }

    /// A fresh two-atom register in this state.
    pub fn state_vector(self) -> StateVector {
        StateVector::from_amplitudes(self.amplitudes().to_vec())
            .expect("bell amplitudes are normalized")
    }

    /// Whether the two atoms give equal outcomes when both are measured
    /// in `basis`. Every Bell state is perfectly correlated or
    /// anticorrelated in both Z and X.
    pub fn correlated_in(self, basis: Basis) -> bool {
        match basis {
            Basis::Z => matches!(self, BellState::PhiPlus | BellState::PhiMinus),
            Basis::X => matches!(self, BellState::PhiPlus | BellState::PsiPlus),
        }
    }

    /// Whether the state is a phi (Z-correlated) state; the psi states
    /// carry odd Z parity. Local bit flips toggle this, local phase flips
    /// preserve it.
    pub fn is_phi(self) -> bool {
        matches!(self, BellState::PhiPlus | BellState::PhiMinus)
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi_plus",
            BellState::PhiMinus => "phi_minus",
            BellState::PsiPlus => "psi_plus",
            BellState::PsiMinus => "psi_minus",
        }
    }
}

impl std::fmt::Display for BellState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
