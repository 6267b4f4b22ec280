//! The two-atom cavity interaction and the entanglement-swapping
//! bookkeeping built on top of it.
//!
//! Sending two atoms through a single-mode cavity driven by a strong
//! classical field implements, at the supported operating point (coupling
//! time lambda*t = pi/4 with detuning-compensated Rabi phase Omega*t =
//! pi), the entangling gate
//!
//! ```text
//! G |xy> = (|xy> - i |x̄ȳ>) / sqrt(2)
//! ```
//!
//! where the bar flips g <-> e. Running the two halves of a group's two
//! Bell pairs through two such cavities (first atoms together, second
//! atoms together) swaps the entanglement: the four final Z outcomes land,
//! with probability 1/4 each, inside exactly one of four disjoint
//! "collections" C0..C3 of outcome combinations, and which collection
//! appears depends only on the two Bell states entering the cavities.
//! That correspondence (the swap table) is what lets each communicant
//! decode the other's two-bit encoding operation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bell::BellState;
use crate::quantum::{Unitary2, Unitary4, C64};
use crate::TOL;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CavityError {
    #[error(
        "unsupported cavity operating point (lambda_t {lambda_t}, omega_t {omega_t}); \
         only lambda_t = pi/4, omega_t = pi is modeled"
    )]
    UnsupportedOperatingPoint { lambda_t: f64, omega_t: f64 },
    #[error("simulated swap outcome {0} falls outside the predicted collection")]
    CollectionMismatch(String),
    #[error("no single peer operation is consistent with the announced collection")]
    DecodeInconsistent,
}

/// The two-bit message encodings: identity, bit flip, bit+phase flip
/// (the real rotation i*sigma_y) and phase flip. The operation *is* the
/// message: applying it to one atom of a shared Bell pair moves the pair
/// to another Bell state, and the bits are recovered by identifying that
/// state through the swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingOp {
    #[serde(rename = "00")]
    U00,
    #[serde(rename = "01")]
    U01,
    #[serde(rename = "10")]
    U10,
    #[serde(rename = "11")]
    U11,
}

impl EncodingOp {
    pub const ALL: [EncodingOp; 4] =
        [EncodingOp::U00, EncodingOp::U01, EncodingOp::U10, EncodingOp::U11];

    pub fn bits(self) -> (u8, u8) {
        match self {
            EncodingOp::U00 => (0, 0),
            EncodingOp::U01 => (0, 1),
            EncodingOp::U10 => (1, 0),
            EncodingOp::U11 => (1, 1),
        }
    }

    pub fn from_bits(hi: u8, lo: u8) -> Option<EncodingOp> {
        match (hi, lo) {
            (0, 0) => Some(EncodingOp::U00),
            (0, 1) => Some(EncodingOp::U01),
            (1, 0) => Some(EncodingOp::U10),
            (1, 1) => Some(EncodingOp::U11),
            _ => None,
        }
    }

    pub fn matrix(self) -> Unitary2 {
        match self {
            EncodingOp::U00 => Unitary2::identity(),
            EncodingOp::U01 => Unitary2::sigma_x(),
            EncodingOp::U10 => Unitary2::i_sigma_y(),
            EncodingOp::U11 => Unitary2::sigma_z(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EncodingOp::U00 => "00",
            EncodingOp::U01 => "01",
            EncodingOp::U10 => "10",
            EncodingOp::U11 => "11",
        }
    }
}

impl std::fmt::Display for EncodingOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Validated cavity operating point. Only the point that realizes the
/// swap gate exactly is supported; other interaction times produce
/// partially entangling evolutions outside this crate's scope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    lambda_t: f64,
    omega_t: f64,
}

impl CavityParams {
    pub fn new(lambda_t: f64, omega_t: f64) -> Result<Self, CavityError> {
        let ok = (lambda_t - std::f64::consts::FRAC_PI_4).abs() <= TOL
            && (omega_t - std::f64::consts::PI).abs() <= TOL;
        if !ok {
            return Err(CavityError::UnsupportedOperatingPoint { lambda_t, omega_t });
        }
        Ok(CavityParams { lambda_t, omega_t })
    }

    /// The supported operating point.
    pub fn standard() -> Self {
        CavityParams {
            lambda_t: std::f64::consts::FRAC_PI_4,
            omega_t: std::f64::consts::PI,
        }
    }

    pub fn lambda_t(self) -> f64 {
        self.lambda_t
    }

    pub fn omega_t(self) -> f64 {
        self.omega_t
    }
}

/// The joint evolution of two atoms sharing the cavity:
/// `(identity - i * flip-both) / sqrt(2)`.
pub fn cavity_gate(params: &CavityParams) -> Unitary4 {
    let _ = params; // the operating point is fixed by construction
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let o = C64::new(h, 0.0);
    let mi = C64::new(0.0, -h);
    let z = C64::new(0.0, 0.0);
    Unitary4::new([
        [o, z, z, mi],
        [z, o, mi, z],
        [z, mi, o, z],
        [mi, z, z, o],
    ])
    .expect("the swap gate is unitary")
}

/// Z-basis outcome of one atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZOutcome {
    G,
    E,
}

impl ZOutcome {
    pub fn flip(self) -> ZOutcome {
        match self {
            ZOutcome::G => ZOutcome::E,
            ZOutcome::E => ZOutcome::G,
        }
    }

    /// Interpret a measured ket as a Z outcome; X-basis kets have none.
    pub fn from_ket(ket: crate::quantum::AtomKet) -> Option<ZOutcome> {
        match ket {
            crate::quantum::AtomKet::G => Some(ZOutcome::G),
            crate::quantum::AtomKet::E => Some(ZOutcome::E),
            _ => None,
        }
    }

    fn ch(self) -> char {
        match self {
            ZOutcome::G => 'g',
            ZOutcome::E => 'e',
        }
    }
}

/// The four Z outcomes of a swapped group: `ac` holds the two first-pair
/// slots that shared a cavity (atoms A and C), `bd` the two second slots
/// (atoms B and D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZOutcomePair {
    pub ac: (ZOutcome, ZOutcome),
    pub bd: (ZOutcome, ZOutcome),
}

impl ZOutcomePair {
    /// All sixteen outcome combinations, in index order gg..ee x gg..ee.
    pub fn all() -> Vec<ZOutcomePair> {
        let outcomes = [ZOutcome::G, ZOutcome::E];
        let mut v = Vec::with_capacity(16);
        for a in outcomes {
            for c in outcomes {
                for b in outcomes {
                    for d in outcomes {
                        v.push(ZOutcomePair { ac: (a, c), bd: (b, d) });
                    }
                }
            }
        }
        v
    }

    pub fn ac_label(&self) -> String {
        format!("{}{}", self.ac.0.ch(), self.ac.1.ch())
    }

    pub fn bd_label(&self) -> String {
        format!("{}{}", self.bd.0.ch(), self.bd.1.ch())
    }
}

impl std::fmt::Display for ZOutcomePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}|{}", self.ac_label(), self.bd_label())
    }
}

/// Announced label for which family of outcome combinations a swapped
/// group produced. Two classical bits; the only payload-dependent
/// announcement in the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Collection {
    C0,
    C1,
    C2,
    C3,
}

impl Collection {
    pub const ALL: [Collection; 4] =
        [Collection::C0, Collection::C1, Collection::C2, Collection::C3];

    /// Member outcome combinations of this collection.
    pub fn members(self) -> [ZOutcomePair; 4] {
        use ZOutcome::{E, G};
        let p = |a, c, b, d| ZOutcomePair { ac: (a, c), bd: (b, d) };
        match self {
            // Both pair-slots disagree: gg|ee, ee|gg, ge|eg, eg|ge.
            Collection::C0 => [p(G, G, E, E), p(E, E, G, G), p(G, E, E, G), p(E, G, G, E)],
            // Both agree: gg|gg, ee|ee, ge|ge, eg|eg.
            Collection::C1 => [p(G, G, G, G), p(E, E, E, E), p(G, E, G, E), p(E, G, E, G)],
            // First slot disagrees, second agrees: gg|eg, ee|ge, ge|ee, eg|gg.
            Collection::C2 => [p(G, G, E, G), p(E, E, G, E), p(G, E, E, E), p(E, G, G, G)],
            // First agrees, second disagrees: gg|ge, ee|eg, ge|gg, eg|ee.
            Collection::C3 => [p(G, G, G, E), p(E, E, E, G), p(G, E, G, G), p(E, G, E, E)],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Collection::C0 => "C0",
            Collection::C1 => "C1",
            Collection::C2 => "C2",
            Collection::C3 => "C3",
        }
    }
}

impl std::fmt::Display for Collection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Closed-form classifier: the collection is determined by whether each
/// cavity flipped the parity between the pair slots, i.e. by the two
/// comparisons (b vs a) and (d vs c).
pub fn classify(outcome: ZOutcomePair) -> Collection {
    let (a, c) = outcome.ac;
    let (b, d) = outcome.bd;
    match (b == a.flip(), d == c.flip()) {
        (true, true) => Collection::C0,
        (false, false) => Collection::C1,
        (true, false) => Collection::C2,
        (false, true) => Collection::C3,
    }
}

/// Which atom of a Bell pair an operation addresses: the first (kept by
/// Alice) or the second (held by Bob).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairAtom {
    A,
    B,
}

/// The two communicants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Alice,
    Bob,
}

/// The Bell state (up to global phase) reached by applying `op` to one
/// atom of a pair in state `s`. Computed by direct simulation; the Bell
/// family is closed under all four operations on either atom.
pub fn bell_after_op(s: BellState, op: EncodingOp, which: PairAtom) -> BellState {
    let mut state = s.state_vector();
    let atom = match which {
        PairAtom::A => 0,
        PairAtom::B => 1,
    };
    state.apply_1(&op.matrix(), atom).expect("two-atom register");
    for candidate in BellState::ALL {
        let overlap = state.inner(&candidate.state_vector()).expect("same size").norm();
        if (overlap - 1.0).abs() <= TOL {
            return candidate;
        }
    }
    unreachable!("encoding operations permute the Bell family");
}

/// Stored swap table: `SWAP_TABLE[row][col]` is the collection produced
/// when the first pair enters the cavities in `row` and the second pair
/// in `col` (indices follow [`BellState::ALL`]). [`regenerated_swap_table`]
/// re-derives every entry from the gate itself; the two must agree.
const SWAP_TABLE: [[Collection; 4]; 4] = {
    use Collection::{C0, C1, C2, C3};
    [
        // row phi+ : cols phi+, phi-, psi+, psi-
        [C0, C1, C2, C3],
        // row phi-
        [C1, C0, C3, C2],
        // row psi+
        [C3, C2, C1, C0],
        // row psi-
        [C2, C3, C0, C1],
    ]
};

fn bell_index(s: BellState) -> usize {
    BellState::ALL.iter().position(|x| *x == s).expect("member of ALL")
}

/// Collection announced when pairs in states `ab` (first) and `cd`
/// (second) are swapped through the cavities.
pub fn swap_collection(ab: BellState, cd: BellState) -> Collection {
    SWAP_TABLE[bell_index(ab)][bell_index(cd)]
}

/// Result of simulating one swap: the single collection every nonzero
/// outcome falls in, plus each outcome's probability.
#[derive(Debug, Clone)]
pub struct SimulatedSwap {
    pub collection: Collection,
    pub outcomes: Vec<(ZOutcomePair, f64)>,
}

/// Run pairs `ab` and `cd` through the two cavities and read the outcome
/// distribution exactly from the final amplitudes. Errors if the nonzero
/// outcomes do not all classify into one collection.
pub fn simulate_swap(ab: BellState, cd: BellState) -> Result<SimulatedSwap, CavityError> {
    // Register order: first pair (atoms A, B), then second pair (C, D).
    let mut state = ab.state_vector().tensor(&cd.state_vector());
    let gate = cavity_gate(&CavityParams::standard());
    state.apply_2(&gate, (0, 2)).expect("atoms A and C");
    state.apply_2(&gate, (1, 3)).expect("atoms B and D");
    let bit = |i: usize, atom: usize| -> ZOutcome {
        if i >> (3 - atom) & 1 == 0 {
            ZOutcome::G
        } else {
            ZOutcome::E
        }
    };
    let mut outcomes = Vec::new();
    let mut collection: Option<Collection> = None;
    for (i, amp) in state.amplitudes().iter().enumerate() {
        let p = amp.norm_sqr();
        if p <= TOL {
            continue;
        }
        let outcome = ZOutcomePair {
            ac: (bit(i, 0), bit(i, 2)),
            bd: (bit(i, 1), bit(i, 3)),
        };
        let c = classify(outcome);
        match collection {
            None => collection = Some(c),
            Some(prev) if prev != c => {
                return Err(CavityError::CollectionMismatch(outcome.to_string()))
            }
            _ => {}
        }
        outcomes.push((outcome, p));
    }
    Ok(SimulatedSwap {
        collection: collection.expect("a unitary image of a state has support"),
        outcomes,
    })
}

/// Re-derive the full swap table by simulation.
pub fn regenerated_swap_table() -> Result<[[Collection; 4]; 4], CavityError> {
    let mut table = SWAP_TABLE; // placeholder values, fully overwritten
    for (r, row_state) in BellState::ALL.iter().enumerate() {
        for (c, col_state) in BellState::ALL.iter().enumerate() {
            table[r][c] = simulate_swap(*row_state, *col_state)?.collection;
        }
    }
    Ok(table)
}

/// Recover the peer's encoding operation from the announced collection.
///
/// `initial` is the Bell state both of the group's pairs started in (the
/// decoder knows it: Alice prepared it, Bob identified it with his Bell
/// measurement). `my_op` is the decoder's own encoding. Alice's operation
/// selects the swap-table row, Bob's the column; fixing one and the
/// announced collection pins the other uniquely because every collection
/// appears exactly once per row and per column.
pub fn decode_peer_op(
    collection: Collection,
    initial: BellState,
    my_op: EncodingOp,
    my_role: Party,
) -> Result<EncodingOp, CavityError> {
    let mut found: Option<EncodingOp> = None;
    for candidate in EncodingOp::ALL {
        let (row, col) = match my_role {
            Party::Alice => (
                bell_after_op(initial, my_op, PairAtom::A),
                bell_after_op(initial, candidate, PairAtom::B),
            ),
            Party::Bob => (
                bell_after_op(initial, candidate, PairAtom::A),
                bell_after_op(initial, my_op, PairAtom::B),
            ),
        };
        if swap_collection(row, col) == collection {
            if found.is_some() {
                return Err(CavityError::DecodeInconsistent);
            }
            found = Some(candidate);
        }
    }
    found.ok_or(CavityError::DecodeInconsistent)
}

/// Serializable dump of the collection definitions and both swap tables.
#[derive(Debug, Clone, Serialize)]
pub struct TableDump {
    pub collections: Vec<CollectionDump>,
    pub stored: Vec<TableEntry>,
    pub regenerated: Vec<TableEntry>,
    pub tables_match: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CollectionDump {
    pub label: Collection,
    pub members: Vec<MemberDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MemberDump {
    pub ac: String,
    pub bd: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableEntry {
    pub row: BellState,
    pub col: BellState,
    pub collection: Collection,
}

/// Build the dump, re-deriving the table by simulation on the way.
pub fn table_dump() -> Result<TableDump, CavityError> {
    let regenerated = regenerated_swap_table()?;
    let entries = |table: &[[Collection; 4]; 4]| -> Vec<TableEntry> {
        let mut v = Vec::with_capacity(16);
        for (r, row) in BellState::ALL.iter().enumerate() {
            for (c, col) in BellState::ALL.iter().enumerate() {
                v.push(TableEntry { row: *row, col: *col, collection: table[r][c] });
            }
        }
        v
    };
    let collections = Collection::ALL
        .iter()
        .map(|c| CollectionDump {
            label: *c,
            members: c
                .members()
                .iter()
                .map(|m| MemberDump { ac: m.ac_label(), bd: m.bd_label() })
                .collect(),
        })
        .collect();
    Ok(TableDump {
        collections,
        stored: entries(&SWAP_TABLE),
        regenerated: entries(&regenerated),
        tables_match: regenerated == SWAP_TABLE,
    })
}
