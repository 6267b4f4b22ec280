//! Eavesdropper models for the quantum channel, and the passive
//! transcript analysis that quantifies what an eavesdropper learns.
//!
//! Three active attacks act on atoms in transit: intercept-resend keeps
//! every atom and forwards fresh Z-basis fakes, measure-resend measures
//! each atom in a random basis and forwards the collapsed atom, and
//! entangle-measure couples each atom to a private ancilla through a
//! tunable unitary and forwards the (now entangled) atom. Each has a
//! closed-form per-sample detection probability at the security checks,
//! which the Monte Carlo experiments in [`crate::analysis`] reproduce.
//!
//! The passive listener reads only the classical transcript. Its
//! knowledge after a session is an exact integer-weighted posterior over
//! the 16 possible (Alice op, Bob op) pairs, computed by enumerating
//! which combinations could have produced the announced collection.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bell::BellState;
use crate::cavity::{bell_after_op, swap_collection, Collection, EncodingOp, PairAtom};
use crate::protocol::{ClassicalMessage, MessageKind, MessagePayload};
use crate::quantum::{Atom, AtomKet, Basis, MeasurementRecord, Register, StateVector, Unitary4, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdversaryError {
    #[error("entangling angle must lie in [0, pi/2], got {0}")]
    ThetaRange(f64),
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
    #[error("the degenerate prior is inconsistent with the announced collection")]
    InconsistentPrior,
}

/// An eavesdropping strategy on the quantum channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AttackModel {
    InterceptResend,
    MeasureResend,
    EntangleMeasure { theta: f64 },
    /// Reads the classical channel only; never touches atoms.
    Passive,
}

/// The atom-ancilla coupling used by the entangle-measure attack:
/// `cos(theta) * identity + i*sin(theta) * (flip ⊗ flip)`, acting on
/// (transit atom, ancilla). Unitary for every real `theta`.
pub fn entangle_unitary(theta: f64) -> Unitary4 {
    let c = C64::new(theta.cos(), 0.0);
    let is = C64::new(0.0, theta.sin());
    let z = C64::new(0.0, 0.0);
    Unitary4::new([
        [c, z, z, is],
        [z, c, is, z],
        [z, is, c, z],
        [is, z, z, c],
    ])
    .expect("cos*I + i*sin*XX is unitary for all theta")
}

impl AttackModel {
    /// Entangle-measure with ancilla excitation probability sin²(theta).
    pub fn entangle_measure(theta: f64) -> Result<AttackModel, AdversaryError> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
            return Err(AdversaryError::ThetaRange(theta));
        }
        Ok(AttackModel::EntangleMeasure { theta })
    }

    pub fn label(&self) -> &'static str {
        match self {
            AttackModel::InterceptResend => "intercept-resend",
            AttackModel::MeasureResend => "measure-resend",
            AttackModel::EntangleMeasure { .. } => "entangle-measure",
            AttackModel::Passive => "passive",
        }
    }

    /// The attack's tunable parameter, if it has one.
    pub fn parameter(&self) -> Option<f64> {
        match self {
            AttackModel::EntangleMeasure { theta } => Some(*theta),
            _ => None,
        }
    }

    /// Closed-form per-sample detection probability at a security check.
    /// `checked_basis` restricts to samples checked in one basis; `None`
    /// averages over the uniform basis choice.
    ///
    /// Intercept-resend: the fake atom is uncorrelated with Alice's half,
    /// so the correlation test fails half the time in either basis.
    /// Measure-resend: a basis mismatch (probability 1/2) randomizes the
    /// checked correlation (flag probability 1/2); a match never flags.
    /// Entangle-measure: the coupling excites the atom-flip branch with
    /// probability sin²(theta) in the Z basis and commutes with X-basis
    /// correlations exactly.
    pub fn analytic_detection(&self, checked_basis: Option<Basis>) -> f64 {
        match self {
            AttackModel::InterceptResend => 0.5,
            AttackModel::MeasureResend => 0.25,
            AttackModel::EntangleMeasure { theta } => {
                let zeta = theta.sin().powi(2);
                match checked_basis {
                    Some(Basis::Z) => zeta,
                    Some(Basis::X) => 0.0,
                    None => zeta / 2.0,
                }
            }
            AttackModel::Passive => 0.0,
        }
    }

    /// Probability that a zero-threshold session aborts when this attack
    /// faces `checked_samples` independent check measurements (both
    /// checks combined; the per-sample rates coincide).
    pub fn abort_probability(&self, checked_samples: usize) -> f64 {
        let p = self.analytic_detection(None);
        1.0 - (1.0 - p).powi(checked_samples as i32)
    }

    /// Act on a transmitted sequence, returning the atoms that actually
    /// arrive (in order). Intercept-resend substitutes fresh fakes; the
    /// other attacks deliver the original handles.
    pub fn act_on_transit(
        &self,
        reg: &mut Register,
        atoms: &[Atom],
        eve: &mut EveRecord,
        rng: &mut impl Rng,
    ) -> Vec<Atom> {
        match self {
            AttackModel::Passive => atoms.to_vec(),
            AttackModel::InterceptResend => atoms
                .iter()
                .map(|atom| {
                    let fake_ket = if rng.random::<bool>() { AtomKet::G } else { AtomKet::E };
                    let fake = reg.add(StateVector::from_kets(&[fake_ket]))[0];
                    eve.intercepted.push(*atom);
                    eve.actions.push(EveAction::Intercepted {
                        original: atom.id(),
                        replacement: fake.id(),
                        fake: fake_ket,
                    });
                    fake
                })
                .collect(),
            AttackModel::MeasureResend => atoms
                .iter()
                .map(|atom| {
                    let basis = if rng.random::<bool>() { Basis::Z } else { Basis::X };
                    let record =
                        reg.measure(*atom, basis, rng).expect("transit atoms are valid");
                    let outcome = match &record.outcome {
                        crate::quantum::MeasurementOutcome::Kets(kets) => kets[0],
                        other => panic!("single-atom measurement, got {other:?}"),
                    };
                    eve.actions.push(EveAction::Measured {
                        atom: atom.id(),
                        basis,
                        outcome,
                    });
                    eve.measurements.push(record);
                    *atom
                })
                .collect(),
            AttackModel::EntangleMeasure { theta } => {
                let coupling = entangle_unitary(*theta);
                atoms
                    .iter()
                    .map(|atom| {
                        let ancilla = reg.add(StateVector::from_kets(&[AtomKet::G]))[0];
                        reg.apply_2(&coupling, *atom, ancilla)
                            .expect("transit atoms are valid");
                        eve.ancillas.push(ancilla);
                        eve.actions.push(EveAction::Entangled {
                            atom: atom.id(),
                            ancilla: ancilla.id(),
                        });
                        *atom
                    })
                    .collect()
            }
        }
    }
}

/// One thing Eve did to one transit atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum EveAction {
    Intercepted { original: usize, replacement: usize, fake: AtomKet },
    Measured { atom: usize, basis: Basis, outcome: AtomKet },
    Entangled { atom: usize, ancilla: usize },
}

/// Eve's session bookkeeping: what she did, what she measured, which
/// register atoms she holds, and her end-of-session posterior over each
/// group's op pair (from the announced collections alone).
#[derive(Debug, Default)]
pub struct EveRecord {
    pub actions: Vec<EveAction>,
    pub measurements: Vec<MeasurementRecord>,
    pub ancillas: Vec<Atom>,
    pub intercepted: Vec<Atom>,
    pub posteriors: Vec<OpPairPosterior>,
}

impl EveRecord {
    pub fn new() -> Self {
        EveRecord::default()
    }

    /// What Eve measured about `atom` (by handle id), if anything.
    pub fn action_on(&self, atom_id: usize) -> Option<&EveAction> {
        self.actions.iter().find(|a| match a {
            EveAction::Intercepted { replacement, .. } => *replacement == atom_id,
            EveAction::Measured { atom, .. } => *atom == atom_id,
            EveAction::Entangled { atom, .. } => *atom == atom_id,
        })
    }

    pub(crate) fn finish_session(&mut self, collections: &[Collection]) {
        self.posteriors = collections
            .iter()
            .map(|c| {
                OpPairPosterior::from_collection(*c, PosteriorPrior::UniformJoint)
                    .expect("uniform prior never conflicts")
            })
            .collect();
    }
}

/// What the listener assumes before reading the transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PosteriorPrior {
    /// Initial Bell state unknown (uniform over four), op pairs uniform.
    UniformJoint,
    /// The group's initial Bell state is public; op pairs uniform.
    KnownInitial(BellState),
    /// Full knowledge of one (initial, op pair) triple.
    Degenerate { initial: BellState, alice: EncodingOp, bob: EncodingOp },
}

/// Exact posterior over the 16 (Alice op, Bob op) pairs, stored as
/// integer consistency counts so entropies come out exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpPairPosterior {
    /// `weights[a][b]` counts the prior-allowed initials under which
    /// (op a by Alice, op b by Bob) produces the announced collection.
    pub weights: [[u64; 4]; 4],
    pub total: u64,
}

fn op_index(op: EncodingOp) -> usize {
    EncodingOp::ALL.iter().position(|x| *x == op).expect("member")
}

impl OpPairPosterior {
    /// Condition the prior on an announced collection.
    pub fn from_collection(
        announced: Collection,
        prior: PosteriorPrior,
    ) -> Result<OpPairPosterior, AdversaryError> {
        let initials: Vec<BellState> = match prior {
            PosteriorPrior::UniformJoint => BellState::ALL.to_vec(),
            PosteriorPrior::KnownInitial(s) => vec![s],
            PosteriorPrior::Degenerate { initial, alice, bob } => {
                let row = bell_after_op(initial, alice, PairAtom::A);
                let col = bell_after_op(initial, bob, PairAtom::B);
                if swap_collection(row, col) != announced {
                    return Err(AdversaryError::InconsistentPrior);
                }
                let mut weights = [[0u64; 4]; 4];
                weights[op_index(alice)][op_index(bob)] = 1;
                return Ok(OpPairPosterior { weights, total: 1 });
            }
        };
        let mut weights = [[0u64; 4]; 4];
        let mut total = 0u64;
        for initial in initials {
            for (a, alice_op) in EncodingOp::ALL.iter().enumerate() {
                let row = bell_after_op(initial, *alice_op, PairAtom::A);
                for (b, bob_op) in EncodingOp::ALL.iter().enumerate() {
                    let col = bell_after_op(initial, *bob_op, PairAtom::B);
                    if swap_collection(row, col) == announced {
                        weights[a][b] += 1;
                        total += 1;
                    }
                }
            }
        }
        Ok(OpPairPosterior { weights, total })
    }

    pub fn probability(&self, alice: EncodingOp, bob: EncodingOp) -> f64 {
        self.weights[op_index(alice)][op_index(bob)] as f64 / self.total as f64
    }

    /// Op pairs with nonzero posterior probability.
    pub fn support_size(&self) -> usize {
        self.weights.iter().flatten().filter(|w| **w > 0).count()
    }

    /// Shannon entropy in bits. Terms whose probabilities are dyadic
    /// rationals (all the cases this protocol produces) are summed
    /// exactly, so uniform posteriors give exact integer bit counts.
    pub fn entropy_bits(&self) -> f64 {
        entropy_of_counts(self.weights.iter().flatten().copied(), self.total)
    }

    /// Marginal distribution over Alice's op.
    pub fn marginal_alice(&self) -> [f64; 4] {
        let mut m = [0.0; 4];
        for (a, row) in self.weights.iter().enumerate() {
            m[a] = row.iter().sum::<u64>() as f64 / self.total as f64;
        }
        m
    }

    /// Marginal distribution over Bob's op.
    pub fn marginal_bob(&self) -> [f64; 4] {
        let mut m = [0.0; 4];
        for row in self.weights.iter() {
            for (b, w) in row.iter().enumerate() {
                m[b] += *w as f64 / self.total as f64;
            }
        }
        m
    }

    pub fn marginal_entropy_alice(&self) -> f64 {
        let counts = self.weights.iter().map(|row| row.iter().sum::<u64>());
        entropy_of_counts(counts, self.total)
    }

    pub fn marginal_entropy_bob(&self) -> f64 {
        let counts = (0..4).map(|b| self.weights.iter().map(|row| row[b]).sum::<u64>());
        entropy_of_counts(counts, self.total)
    }
}

/// Entropy in bits of integer counts summing to `total`. Power-of-two
/// probability terms are accumulated without transcendental calls, so
/// dyadic distributions (the only ones arising here) are exact.
fn entropy_of_counts(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    let t = total as f64;
    let mut bits = 0.0;
    for n in counts {
        if n == 0 {
            continue;
        }
        if total % n == 0 && (total / n).is_power_of_two() {
            bits += (n as f64 / t) * (total / n).trailing_zeros() as f64;
        } else {
            let p = n as f64 / t;
            bits -= p * p.log2();
        }
    }
    bits
}

/// The passive listener's exact posterior after one single-group
/// session; reads the collection announcement from the transcript. The
/// entropy is [`OpPairPosterior::entropy_bits`] on the result.
pub fn passive_posterior(
    transcript: &[ClassicalMessage],
    prior: PosteriorPrior,
) -> Result<OpPairPosterior, AdversaryError> {
    let announced: Vec<&Vec<Collection>> = transcript
        .iter()
        .filter(|m| m.kind == MessageKind::CollectionAnnouncement)
        .map(|m| match &m.payload {
            MessagePayload::Collections(c) => Ok(c),
            other => Err(AdversaryError::MalformedTranscript(format!(
                "collection announcement carries {other:?}"
            ))),
        })
        .collect::<Result<_, _>>()?;
    match announced.as_slice() {
        [collections] => match collections.as_slice() {
            [c] => OpPairPosterior::from_collection(*c, prior),
            _ => Err(AdversaryError::MalformedTranscript(format!(
                "expected one group, announcement covers {}",
                collections.len()
            ))),
        },
        _ => Err(AdversaryError::MalformedTranscript(format!(
            "expected exactly one collection announcement, found {}",
            announced.len()
        ))),
    }
}
