//! The six-step dialogue session between Alice and Bob.
//!
//! One session walks the full exchange: Alice prepares the Bell-pair
//! groups and sends Bob his halves with check pairs mixed in (step 1),
//! the first security check spends those pairs on correlation tests
//! (step 2), Alice encodes her bits and sends her halves with decoy
//! atoms mixed in (step 3), the second check spends the decoys (step 4),
//! Bob identifies each group's initial state and encodes his bits
//! (step 5), and the cavity swap plus Z measurements produce the
//! announced collections from which both sides decode (step 6).
//!
//! The quantum channel is attackable (an [`AttackModel`] may rewrite
//! atoms in transit); the classical channel is authenticated, so every
//! [`ClassicalMessage`] arrives unmodified but is readable by anyone.
//! Sessions are deterministic in the seed: one RNG drives every random
//! choice in a fixed order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AttackModel, EveRecord};
use crate::bell::BellState;
use crate::cavity::{
    cavity_gate, classify, decode_peer_op, CavityError, CavityParams, Collection, EncodingOp,
    Party, ZOutcome, ZOutcomePair,
};
use crate::quantum::{Atom, AtomKet, Basis, QuantumError, Register, StateVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("n_message_pairs must be at least 1")]
    ZeroGroups,
    #[error("initial_states needs one entry per group ({expected}), got {got}")]
    InitialStates { expected: usize, got: usize },
    #[error("error_threshold must lie in [0, 1], got {0}")]
    ThresholdRange(f64),
    #[error("{party:?} message list needs {expected} entries, got {got}")]
    MessageLength { party: Party, expected: usize, got: usize },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Cavity(#[from] CavityError),
}

/// Session parameters. Group `n` uses `initial_states[n]` for both of
/// its Bell pairs unless `randomize_initials` asks for fresh uniform
/// draws instead (a fuzzing aid; the parties still know the draws).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub n_message_pairs: usize,
    pub initial_states: Vec<BellState>,
    pub randomize_initials: bool,
    /// Check Bell pairs mixed into the first transmission.
    pub first_check_samples: usize,
    /// Decoy atoms mixed into the second transmission.
    pub second_check_samples: usize,
    /// A check passes while its error rate stays at or below this.
    pub error_threshold: f64,
    pub rng_seed: u64,
}

impl ProtocolConfig {
    /// Config with the default check sizes (one sample and one decoy per
    /// group), zero error tolerance, and the crate's default seed.
    pub fn new(n_message_pairs: usize, initial_states: Vec<BellState>) -> Self {
        ProtocolConfig {
            n_message_pairs,
            initial_states,
            randomize_initials: false,
            first_check_samples: n_message_pairs,
            second_check_samples: n_message_pairs,
            error_threshold: 0.0,
            rng_seed: crate::DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n_message_pairs == 0 {
            return Err(ProtocolError::ZeroGroups);
        }
        if !self.randomize_initials && self.initial_states.len() != self.n_message_pairs {
            return Err(ProtocolError::InitialStates {
                expected: self.n_message_pairs,
                got: self.initial_states.len(),
            });
        }
        if !(0.0..=1.0).contains(&self.error_threshold) {
            return Err(ProtocolError::ThresholdRange(self.error_threshold));
        }
        Ok(())
    }
}

/// The two-bit messages each side wants to send, one operation per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageBits {
    pub alice: Vec<EncodingOp>,
    pub bob: Vec<EncodingOp>,
}

impl MessageBits {
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let mut draw = || EncodingOp::ALL[rng.random_range(0..4)];
        let alice = (0..n).map(|_| draw()).collect();
        let bob = (0..n).map(|_| draw()).collect();
        MessageBits { alice, bob }
    }

    pub fn validate(&self, n: usize) -> Result<(), ProtocolError> {
        if self.alice.len() != n {
            return Err(ProtocolError::MessageLength {
                party: Party::Alice,
                expected: n,
                got: self.alice.len(),
            });
        }
        if self.bob.len() != n {
            return Err(ProtocolError::MessageLength {
                party: Party::Bob,
                expected: n,
                got: self.bob.len(),
            });
        }
        Ok(())
    }
}

/// Why an atom travels in a transmitted sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomRole {
    Payload,
    SampleBell,
    DecoySingle,
}

/// An ordered transmission sequence: payload atoms in preparation order
/// with check atoms spliced in at random slots.
#[derive(Debug, Clone)]
pub struct AtomSequence {
    entries: Vec<(Atom, AtomRole)>,
}

impl AtomSequence {
    /// Splice `extras` into `payload` at uniformly random slots of the
    /// combined sequence. Returns the sequence and the sorted slot
    /// indices the extras landed on (extras keep their relative order).
    pub fn interleave(
        payload: Vec<Atom>,
        extras: Vec<Atom>,
        extra_role: AtomRole,
        rng: &mut impl Rng,
    ) -> (AtomSequence, Vec<usize>) {
        let total = payload.len() + extras.len();
        let mut slots = rand::seq::index::sample(rng, total, extras.len()).into_vec();
        slots.sort_unstable();
        let mut entries = Vec::with_capacity(total);
        let (mut pi, mut ei) = (0, 0);
        for i in 0..total {
            if ei < slots.len() && slots[ei] == i {
                entries.push((extras[ei], extra_role));
                ei += 1;
            } else {
                entries.push((payload[pi], AtomRole::Payload));
                pi += 1;
            }
        }
        (AtomSequence { entries }, slots)
    }

    /// Atom handles in transmission order.
    pub fn atoms(&self) -> Vec<Atom> {
        self.entries.iter().map(|(a, _)| *a).collect()
    }

    /// Payload atoms in their original preparation order (what remains
    /// once the announced check positions are removed).
    pub fn payload(&self) -> Vec<Atom> {
        self.entries
            .iter()
            .filter(|(_, role)| *role == AtomRole::Payload)
            .map(|(a, _)| *a)
            .collect()
    }

    /// Non-payload atoms in order.
    pub fn extras(&self) -> Vec<Atom> {
        self.entries
            .iter()
            .filter(|(_, role)| *role != AtomRole::Payload)
            .map(|(a, _)| *a)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Replace the handles with what actually arrived (an attacker may
    /// have substituted atoms); roles and order are position-bound.
    pub fn rebind(&mut self, delivered: Vec<Atom>) {
        assert_eq!(delivered.len(), self.entries.len(), "transit preserves length");
        for (entry, atom) in self.entries.iter_mut().zip(delivered) {
            entry.0 = atom;
        }
    }
}

/// Which physical transmission a receipt acknowledges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransmissionLeg {
    /// Bob's halves plus check pairs (the first transmission).
    BAtoms,
    /// Alice's encoded halves plus decoys (the second transmission).
    AAtoms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageKind {
    Receipt,
    SamplePositions,
    BasisAnnouncement,
    MeasurementResults,
    CheckVerdict,
    CollectionAnnouncement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessagePayload {
    Receipt { leg: TransmissionLeg },
    Positions(Vec<usize>),
    Bases(Vec<Basis>),
    Outcomes(Vec<AtomKet>),
    Verdict { error_rate: f64, proceed: bool },
    Collections(Vec<Collection>),
}

/// One authenticated classical-channel message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub sender: Party,
    pub kind: MessageKind,
    pub payload: MessagePayload,
}

/// Which security check stopped an aborted session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbortStage {
    FirstCheck,
    SecondCheck,
}

/// Per-sample record of one security-check comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSample {
    /// Handle id of the atom Bob measured (the one that was in transit).
    pub atom: usize,
    /// Slot the atom occupied in the transmitted sequence.
    pub position: usize,
    pub basis: Basis,
    pub error: bool,
}

/// Everything a finished (or aborted) session produced.
///
/// `alice_decoded` is the message Alice recovered (Bob's bits) and
/// `bob_decoded` the one Bob recovered (Alice's bits); on an honest
/// channel they equal `bob_sent` and `alice_sent` respectively.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionResult {
    pub aborted: Option<AbortStage>,
    pub initial_states: Vec<BellState>,
    pub alice_sent: Vec<EncodingOp>,
    pub bob_sent: Vec<EncodingOp>,
    pub alice_decoded: Vec<EncodingOp>,
    pub bob_decoded: Vec<EncodingOp>,
    pub collections: Vec<Collection>,
    pub first_check_error_rate: Option<f64>,
    pub second_check_error_rate: Option<f64>,
    pub first_check_details: Vec<CheckSample>,
    pub second_check_details: Vec<CheckSample>,
    pub transcript: Vec<ClassicalMessage>,
}

/// A session result together with the eavesdropper's bookkeeping.
#[derive(Debug)]
pub struct SessionTrace {
    pub result: SessionResult,
    pub eve: EveRecord,
}

/// Run a session seeded from the config.
pub fn run_session(
    config: &ProtocolConfig,
    bits: &MessageBits,
    attack: Option<&AttackModel>,
) -> Result<SessionResult, ProtocolError> {
    Ok(run_session_traced(config, bits, attack)?.result)
}

/// Like [`run_session`], returning the eavesdropper record as well.
pub fn run_session_traced(
    config: &ProtocolConfig,
    bits: &MessageBits,
    attack: Option<&AttackModel>,
) -> Result<SessionTrace, ProtocolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    run_session_with_rng(config, bits, attack, &mut rng)
}

struct Pair {
    a: Atom,
    b: Atom,
}

struct Group {
    initial: BellState,
    pair1: Pair,
    pair2: Pair,
    learned_initial: Option<BellState>,
}

fn random_bell(rng: &mut impl Rng) -> BellState {
    BellState::ALL[rng.random_range(0..4)]
}

fn random_basis(rng: &mut impl Rng) -> Basis {
    if rng.random::<bool>() {
        Basis::Z
    } else {
        Basis::X
    }
}

fn single_ket(record: &crate::quantum::MeasurementRecord) -> AtomKet {
    match &record.outcome {
        crate::quantum::MeasurementOutcome::Kets(kets) => kets[0],
        other => panic!("expected a single-atom outcome, got {other:?}"),
    }
}

fn z_outcome(
    reg: &mut Register,
    atom: Atom,
    rng: &mut impl Rng,
) -> Result<ZOutcome, ProtocolError> {
    let record = reg.measure(atom, Basis::Z, rng)?;
    Ok(ZOutcome::from_ket(single_ket(&record)).expect("Z measurement yields g or e"))
}

fn transit(
    reg: &mut Register,
    sequence: &mut AtomSequence,
    attack: Option<&AttackModel>,
    eve: &mut EveRecord,
    rng: &mut impl Rng,
) {
    if let Some(model) = attack {
        let delivered = model.act_on_transit(reg, &sequence.atoms(), eve, rng);
        sequence.rebind(delivered);
    }
}

/// Run a session on a caller-supplied RNG (shared by Alice, Bob, and the
/// attacker, which keeps a whole session reproducible from one seed).
pub fn run_session_with_rng(
    config: &ProtocolConfig,
    bits: &MessageBits,
    attack: Option<&AttackModel>,
    rng: &mut impl Rng,
) -> Result<SessionTrace, ProtocolError> {
    config.validate()?;
    bits.validate(config.n_message_pairs)?;
    let n = config.n_message_pairs;
    let mut reg = Register::new();
    let mut eve = EveRecord::new();
    let mut transcript = Vec::new();

    // Step 1: prepare the payload groups (two identical Bell pairs per
    // group) and the check pairs, and splice the check halves into Bob's
    // transmission at random slots.
    let initials: Vec<BellState> = if config.randomize_initials {
        (0..n).map(|_| random_bell(rng)).collect()
    } else {
        config.initial_states.clone()
    };
    let mut groups: Vec<Group> = initials
        .iter()
        .map(|s| {
            let (a1, b1) = reg.add_bell(*s);
            let (a2, b2) = reg.add_bell(*s);
            Group {
                initial: *s,
                pair1: Pair { a: a1, b: b1 },
                pair2: Pair { a: a2, b: b2 },
                learned_initial: None,
            }
        })
        .collect();
    struct Sample {
        state: BellState,
        alice_atom: Atom,
    }
    let mut samples = Vec::with_capacity(config.first_check_samples);
    let mut sample_b_atoms = Vec::with_capacity(config.first_check_samples);
    for _ in 0..config.first_check_samples {
        let state = random_bell(rng);
        let (a, b) = reg.add_bell(state);
        samples.push(Sample { state, alice_atom: a });
        sample_b_atoms.push(b);
    }
    let payload_b: Vec<Atom> = groups.iter().flat_map(|g| [g.pair1.b, g.pair2.b]).collect();
    let (mut seq_b, sample_positions) =
        AtomSequence::interleave(payload_b, sample_b_atoms, AtomRole::SampleBell, rng);

    transit(&mut reg, &mut seq_b, attack, &mut eve, rng);
    transcript.push(ClassicalMessage {
        sender: Party::Bob,
        kind: MessageKind::Receipt,
        payload: MessagePayload::Receipt { leg: TransmissionLeg::BAtoms },
    });

    // Step 2: first security check. Alice reveals the check slots; Bob
    // measures each check atom in a fresh random basis and announces
    // basis and outcome; Alice measures her paired halves in the same
    // bases and scores correlation violations.
    transcript.push(ClassicalMessage {
        sender: Party::Alice,
        kind: MessageKind::SamplePositions,
        payload: MessagePayload::Positions(sample_positions.clone()),
    });
    let bob_check_atoms = seq_b.extras();
    let mut bases = Vec::with_capacity(samples.len());
    let mut bob_outcomes = Vec::with_capacity(samples.len());
    for atom in &bob_check_atoms {
        let basis = random_basis(rng);
        let record = reg.measure(*atom, basis, rng)?;
        bases.push(basis);
        bob_outcomes.push(single_ket(&record));
    }
    transcript.push(ClassicalMessage {
        sender: Party::Bob,
        kind: MessageKind::BasisAnnouncement,
        payload: MessagePayload::Bases(bases.clone()),
    });
    transcript.push(ClassicalMessage {
        sender: Party::Bob,
        kind: MessageKind::MeasurementResults,
        payload: MessagePayload::Outcomes(bob_outcomes.clone()),
    });
    let mut first_details = Vec::with_capacity(samples.len());
    let mut first_errors = 0usize;
    for (k, sample) in samples.iter().enumerate() {
        let record = reg.measure(sample.alice_atom, bases[k], rng)?;
        let alice_ket = single_ket(&record);
        let agree = alice_ket == bob_outcomes[k];
        let error = agree != sample.state.correlated_in(bases[k]);
        first_errors += usize::from(error);
        first_details.push(CheckSample {
            atom: bob_check_atoms[k].id(),
            position: sample_positions[k],
            basis: bases[k],
            error,
        });
    }
    let first_rate = first_errors as f64 / samples.len().max(1) as f64;
    let first_ok = first_rate <= config.error_threshold;
    transcript.push(ClassicalMessage {
        sender: Party::Alice,
        kind: MessageKind::CheckVerdict,
        payload: MessagePayload::Verdict { error_rate: first_rate, proceed: first_ok },
    });
    let abort = |stage, transcript: Vec<ClassicalMessage>, first, second, d1, d2, eve| {
        SessionTrace {
            result: SessionResult {
                aborted: Some(stage),
                initial_states: initials.clone(),
                alice_sent: bits.alice.clone(),
                bob_sent: bits.bob.clone(),
                alice_decoded: Vec::new(),
                bob_decoded: Vec::new(),
                collections: Vec::new(),
                first_check_error_rate: first,
                second_check_error_rate: second,
                first_check_details: d1,
                second_check_details: d2,
                transcript,
            },
            eve,
        }
    };
    if !first_ok {
        return Ok(abort(
            AbortStage::FirstCheck,
            transcript,
            Some(first_rate),
            None,
            first_details,
            Vec::new(),
            eve,
        ));
    }

    // Step 3: Alice encodes her bits on the first pair of each group and
    // splices random-state decoy atoms into her own transmission.
    for (g, op) in groups.iter().zip(&bits.alice) {
        reg.apply_1(&op.matrix(), g.pair1.a)?;
    }
    let mut decoys: Vec<AtomKet> = Vec::with_capacity(config.second_check_samples);
    let mut decoy_atoms = Vec::with_capacity(config.second_check_samples);
    for _ in 0..config.second_check_samples {
        let ket = AtomKet::ALL[rng.random_range(0..4)];
        let atoms = reg.add(StateVector::from_kets(&[ket]));
        decoys.push(ket);
        decoy_atoms.push(atoms[0]);
    }
    let payload_a: Vec<Atom> = groups.iter().flat_map(|g| [g.pair1.a, g.pair2.a]).collect();
    let (mut seq_a, decoy_positions) =
        AtomSequence::interleave(payload_a, decoy_atoms, AtomRole::DecoySingle, rng);

    transit(&mut reg, &mut seq_a, attack, &mut eve, rng);
    transcript.push(ClassicalMessage {
        sender: Party::Bob,
        kind: MessageKind::Receipt,
        payload: MessagePayload::Receipt { leg: TransmissionLeg::AAtoms },
    });

    // Step 4: second security check. Alice announces where the decoys
    // sit and which basis each was prepared in; Bob measures and reports;
    // Alice scores any outcome that differs from what she prepared.
    transcript.push(ClassicalMessage {
        sender: Party::Alice,
        kind: MessageKind::SamplePositions,
        payload: MessagePayload::Positions(decoy_positions.clone()),
    });
    let decoy_bases: Vec<Basis> = decoys.iter().map(|k| k.basis()).collect();
    transcript.push(ClassicalMessage {
        sender: Party::Alice,
        kind: MessageKind::BasisAnnouncement,
        payload: MessagePayload::Bases(decoy_bases.clone()),
    });
    let received_decoys = seq_a.extras();
    let mut decoy_outcomes = Vec::with_capacity(decoys.len());
    for (atom, basis) in received_decoys.iter().zip(&decoy_bases) {
        let record = reg.measure(*atom, *basis, rng)?;
        decoy_outcomes.push(single_ket(&record));
    }
    transcript.push(ClassicalMessage {
        sender: Party::Bob,
        kind: MessageKind::MeasurementResults,
        payload: MessagePayload::Outcomes(decoy_outcomes.clone()),
    });
    let mut second_details = Vec::with_capacity(decoys.len());
    let mut second_errors = 0usize;
    for (k, prepared) in decoys.iter().enumerate() {
        let error = decoy_outcomes[k] != *prepared;
        second_errors += usize::from(error);
        second_details.push(CheckSample {
            atom: received_decoys[k].id(),
            position: decoy_positions[k],
            basis: decoy_bases[k],
            error,
        });
    }
    let second_rate = second_errors as f64 / decoys.len().max(1) as f64;
    let second_ok = second_rate <= config.error_threshold;
    transcript.push(ClassicalMessage {
        sender: Party::Alice,
        kind: MessageKind::CheckVerdict,
        payload: MessagePayload::Verdict { error_rate: second_rate, proceed: second_ok },
    });
    if !second_ok {
        return Ok(abort(
            AbortStage::SecondCheck,
            transcript,
            Some(first_rate),
            Some(second_rate),
            first_details,
            second_details,
            eve,
        ));
    }

    // Rebind payload handles to what actually arrived: payload order is
    // preserved once the announced check slots are dropped.
    let arrived_b = seq_b.payload();
    let arrived_a = seq_a.payload();
    for (i, g) in groups.iter_mut().enumerate() {
        g.pair1.b = arrived_b[2 * i];
        g.pair2.b = arrived_b[2 * i + 1];
        g.pair1.a = arrived_a[2 * i];
        g.pair2.a = arrived_a[2 * i + 1];
    }

    // Step 5: Bob identifies each group's initial state by Bell-measuring
    // its second pair, prepares a fresh pair in the identified state, and
    // encodes his bits on the fresh pair's B atom.
    for (g, op) in groups.iter_mut().zip(&bits.bob) {
        let record = reg.measure_bell(g.pair2.a, g.pair2.b, rng)?;
        let learned = match record.outcome {
            crate::quantum::MeasurementOutcome::Bell(b) => b,
            ref other => panic!("expected a Bell outcome, got {other:?}"),
        };
        g.learned_initial = Some(learned);
        let (a2, b2) = reg.add_bell(learned);
        g.pair2 = Pair { a: a2, b: b2 };
        reg.apply_1(&op.matrix(), g.pair2.b)?;
    }

    // Step 6: per group, run the two A atoms through one cavity and the
    // two B atoms through the other, Z-measure all four, classify, and
    // decode both ways; Bob announces the collections.
    let gate = cavity_gate(&CavityParams::standard());
    let mut collections = Vec::with_capacity(n);
    let mut bob_decoded = Vec::with_capacity(n);
    let mut alice_decoded = Vec::with_capacity(n);
    for (g, bob_op) in groups.iter().zip(&bits.bob) {
        reg.apply_2(&gate, g.pair1.a, g.pair2.a)?;
        reg.apply_2(&gate, g.pair1.b, g.pair2.b)?;
        let outcome = ZOutcomePair {
            ac: (
                z_outcome(&mut reg, g.pair1.a, rng)?,
                z_outcome(&mut reg, g.pair2.a, rng)?,
            ),
            bd: (
                z_outcome(&mut reg, g.pair1.b, rng)?,
                z_outcome(&mut reg, g.pair2.b, rng)?,
            ),
        };
        let collection = classify(outcome);
        let learned = g.learned_initial.expect("set in step 5");
        bob_decoded.push(decode_peer_op(collection, learned, *bob_op, Party::Bob)?);
        collections.push(collection);
    }
    transcript.push(ClassicalMessage {
        sender: Party::Bob,
        kind: MessageKind::CollectionAnnouncement,
        payload: MessagePayload::Collections(collections.clone()),
    });
    for ((g, alice_op), collection) in groups.iter().zip(&bits.alice).zip(&collections) {
        alice_decoded.push(decode_peer_op(*collection, g.initial, *alice_op, Party::Alice)?);
    }

    eve.finish_session(&collections);
    Ok(SessionTrace {
        result: SessionResult {
            aborted: None,
            initial_states: initials,
            alice_sent: bits.alice.clone(),
            bob_sent: bits.bob.clone(),
            alice_decoded,
            bob_decoded,
            collections,
            first_check_error_rate: Some(first_rate),
            second_check_error_rate: Some(second_rate),
            first_check_details: first_details,
            second_check_details: second_details,
            transcript,
        },
        eve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn honest(config: &ProtocolConfig, bits: &MessageBits) -> SessionResult {
        run_session(config, bits, None).expect("honest session runs")
    }

    #[test]
    fn honest_session_decodes_both_directions_with_zero_errors() {
        let config = ProtocolConfig::new(
            3,
            vec![BellState::PsiMinus, BellState::PhiPlus, BellState::PsiPlus],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let bits = MessageBits::random(3, &mut rng);
        let result = honest(&config, &bits);
        assert_eq!(result.aborted, None);
        assert_eq!(result.first_check_error_rate, Some(0.0));
        assert_eq!(result.second_check_error_rate, Some(0.0));
        assert_eq!(result.bob_decoded, bits.alice);
        assert_eq!(result.alice_decoded, bits.bob);
        assert_eq!(result.collections.len(), 3);
    }

    #[test]
    fn psi_minus_group_with_01_and_10_announces_c1() {
        for seed in 0..20 {
            let mut config = ProtocolConfig::new(1, vec![BellState::PsiMinus]);
            config.rng_seed = seed;
            let bits =
                MessageBits { alice: vec![EncodingOp::U01], bob: vec![EncodingOp::U10] };
            let result = honest(&config, &bits);
            assert_eq!(result.collections, vec![Collection::C1], "seed {seed}");
            assert_eq!(result.bob_decoded, vec![EncodingOp::U01]);
            assert_eq!(result.alice_decoded, vec![EncodingOp::U10]);
        }
    }

    #[test]
    fn every_initial_and_op_pair_round_trips() {
        for initial in BellState::ALL {
            for alice_op in EncodingOp::ALL {
                for bob_op in EncodingOp::ALL {
                    let mut config = ProtocolConfig::new(1, vec![initial]);
                    config.rng_seed = 99;
                    let bits = MessageBits { alice: vec![alice_op], bob: vec![bob_op] };
                    let result = honest(&config, &bits);
                    assert_eq!(
                        result.bob_decoded,
                        vec![alice_op],
                        "{initial} {alice_op} {bob_op}"
                    );
                    assert_eq!(
                        result.alice_decoded,
                        vec![bob_op],
                        "{initial} {alice_op} {bob_op}"
                    );
                }
            }
        }
    }

    #[test]
    fn transcript_depends_on_payload_only_through_the_collection_announcement() {
        let config = ProtocolConfig::new(2, vec![BellState::PhiPlus, BellState::PsiMinus]);
        let bits_a = MessageBits {
            alice: vec![EncodingOp::U00, EncodingOp::U00],
            bob: vec![EncodingOp::U00, EncodingOp::U00],
        };
        let bits_b = MessageBits {
            alice: vec![EncodingOp::U01, EncodingOp::U11],
            bob: vec![EncodingOp::U10, EncodingOp::U00],
        };
        let t_a = honest(&config, &bits_a).transcript;
        let t_b = honest(&config, &bits_b).transcript;
        assert_eq!(t_a.len(), t_b.len());
        let last = t_a.len() - 1;
        for i in 0..last {
            assert_eq!(t_a[i], t_b[i], "message {i} must not depend on the payload");
        }
        assert_eq!(t_a[last].kind, MessageKind::CollectionAnnouncement);
        assert_eq!(t_b[last].kind, MessageKind::CollectionAnnouncement);
        assert_ne!(t_a[last], t_b[last], "different bits give different collections here");
    }

    #[test]
    fn transcript_kinds_follow_the_protocol_order() {
        let config = ProtocolConfig::new(1, vec![BellState::PhiMinus]);
        let bits = MessageBits { alice: vec![EncodingOp::U11], bob: vec![EncodingOp::U01] };
        let kinds: Vec<MessageKind> =
            honest(&config, &bits).transcript.iter().map(|m| m.kind).collect();
        use MessageKind::*;
        assert_eq!(
            kinds,
            vec![
                Receipt,
                SamplePositions,
                BasisAnnouncement,
                MeasurementResults,
                CheckVerdict,
                Receipt,
                SamplePositions,
                BasisAnnouncement,
                MeasurementResults,
                CheckVerdict,
                CollectionAnnouncement,
            ]
        );
    }

    #[test]
    fn interleave_keeps_payload_order_after_removal() {
        let mut reg = Register::new();
        let payload: Vec<Atom> = (0..6)
            .map(|_| reg.add(StateVector::from_kets(&[AtomKet::G]))[0])
            .collect();
        let extras: Vec<Atom> = (0..4)
            .map(|_| reg.add(StateVector::from_kets(&[AtomKet::E]))[0])
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (seq, positions) =
            AtomSequence::interleave(payload.clone(), extras.clone(), AtomRole::SampleBell, &mut rng);
        assert_eq!(seq.len(), 10);
        assert_eq!(seq.payload(), payload);
        assert_eq!(seq.extras(), extras);
        let atoms = seq.atoms();
        for (k, pos) in positions.iter().enumerate() {
            assert_eq!(atoms[*pos], extras[k]);
        }
    }

    #[test]
    fn zero_check_sessions_still_decode() {
        let mut config = ProtocolConfig::new(2, vec![BellState::PhiPlus, BellState::PhiMinus]);
        config.first_check_samples = 0;
        config.second_check_samples = 0;
        let bits = MessageBits {
            alice: vec![EncodingOp::U10, EncodingOp::U01],
            bob: vec![EncodingOp::U11, EncodingOp::U00],
        };
        let result = honest(&config, &bits);
        assert_eq!(result.aborted, None);
        assert_eq!(result.first_check_error_rate, Some(0.0));
        assert_eq!(result.bob_decoded, bits.alice);
        assert_eq!(result.alice_decoded, bits.bob);
    }

    #[test]
    fn randomized_initials_still_round_trip() {
        let mut config = ProtocolConfig::new(4, Vec::new());
        config.randomize_initials = true;
        config.rng_seed = 31;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let bits = MessageBits::random(4, &mut rng);
        let result = honest(&config, &bits);
        assert_eq!(result.aborted, None);
        assert_eq!(result.initial_states.len(), 4);
        assert_eq!(result.bob_decoded, bits.alice);
        assert_eq!(result.alice_decoded, bits.bob);
    }

    #[test]
    fn identical_seeds_reproduce_identical_results() {
        let mut config = ProtocolConfig::new(2, vec![BellState::PsiPlus, BellState::PhiPlus]);
        config.rng_seed = 12345;
        let bits = MessageBits {
            alice: vec![EncodingOp::U01, EncodingOp::U10],
            bob: vec![EncodingOp::U11, EncodingOp::U01],
        };
        let r1 = honest(&config, &bits);
        let r2 = honest(&config, &bits);
        assert_eq!(r1, r2);
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        assert_eq!(
            ProtocolConfig::new(0, Vec::new()).validate(),
            Err(ProtocolError::ZeroGroups)
        );
        assert_eq!(
            ProtocolConfig::new(2, vec![BellState::PhiPlus]).validate(),
            Err(ProtocolError::InitialStates { expected: 2, got: 1 })
        );
        let mut config = ProtocolConfig::new(1, vec![BellState::PhiPlus]);
        config.error_threshold = 1.5;
        assert_eq!(config.validate(), Err(ProtocolError::ThresholdRange(1.5)));
        let bits = MessageBits { alice: vec![EncodingOp::U00], bob: Vec::new() };
        assert_eq!(
            bits.validate(1),
            Err(ProtocolError::MessageLength { party: Party::Bob, expected: 1, got: 0 })
        );
    }
}
