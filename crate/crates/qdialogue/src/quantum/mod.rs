//! Exact dense state-vector simulation of small atom registers.
//!
//! A register of `n` two-level atoms is a vector of `2^n` complex
//! amplitudes over the Z (energy) basis. Atom 0 occupies the most
//! significant bit of the basis index; the ground state |g> is bit 0 and
//! the excited state |e> is bit 1, so for two atoms the basis order is
//! |gg>, |ge>, |eg>, |ee>. Measurement collapses renormalize in place and
//! never reindex atoms; [`StateVector::discard`] removes atoms explicitly
//! once they have factored out of the rest of the register.
//!
//! Everything here is exact up to the crate tolerance [`crate::TOL`]:
//! gates are checked for unitarity on construction and collapse
//! probabilities always equal the squared norm of the projected state.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bell::BellState;
use crate::TOL;

pub mod register;

pub use register::{Atom, Register};

/// Shorthand for the amplitude scalar type.
pub type C64 = Complex64;

/// Errors surfaced by register construction and manipulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("amplitude vector length {0} is not a power of two covering at least one atom")]
    BadLength(usize),
    #[error("state norm {0} is not 1 within tolerance")]
    NotNormalized(f64),
    #[error("atom index {index} out of range for a register of {atoms} atoms")]
    AtomOutOfRange { index: usize, atoms: usize },
    #[error("atom index {0} appears more than once")]
    DuplicateAtom(usize),
    #[error("matrix is not unitary (max residual {0:.3e})")]
    NotUnitary(f64),
    #[error("register sizes differ: {0} atoms vs {1} atoms")]
    DimensionMismatch(usize, usize),
    #[error("atoms {0:?} are still entangled with the rest of the register")]
    DiscardEntangled(Vec<usize>),
    #[error("discarding every atom would leave an empty register")]
    DiscardAll,
}

/// The four single-atom states the protocol prepares and announces:
/// the Z eigenstates |g>, |e> and the X eigenstates |+>, |->.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKet {
    G,
    E,
    Plus,
    Minus,
}

impl AtomKet {
    pub const ALL: [AtomKet; 4] = [AtomKet::G, AtomKet::E, AtomKet::Plus, AtomKet::Minus];

    /// Amplitudes over (|g>, |e>).
    pub fn amplitudes(self) -> [C64; 2] {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            AtomKet::G => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            AtomKet::E => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            AtomKet::Plus => [h, h],
            AtomKet::Minus => [h, -h],
        }
    }

    /// The measurement basis this ket is an eigenstate of.
    pub fn basis(self) -> Basis {
        match self {
            AtomKet::G | AtomKet::E => Basis::Z,
            AtomKet::Plus | AtomKet::Minus => Basis::X,
        }
    }
}

/// Single-atom measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    /// Outcome labels in fixed order (outcome 0, outcome 1).
    pub fn outcomes(self) -> [AtomKet; 2] {
        match self {
            Basis::Z => [AtomKet::G, AtomKet::E],
            Basis::X => [AtomKet::Plus, AtomKet::Minus],
        }
    }
}

/// A 2x2 unitary, validated on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[C64; 2]; 2],
}

impl Unitary2 {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self, QuantumError> {
        let mut residual: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let mut dot = C64::new(0.0, 0.0);
                for k in 0..2 {
                    dot += m[k][r].conj() * m[k][c];
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                residual = residual.max((dot - expect).norm());
            }
        }
        if residual > TOL {
            return Err(QuantumError::NotUnitary(residual));
        }
        Ok(Unitary2 { m })
    }

    pub fn identity() -> Self {
        Unitary2 { m: real2([[1.0, 0.0], [0.0, 1.0]]) }
    }

    /// Bit flip |g> <-> |e>.
    pub fn sigma_x() -> Self {
        Unitary2 { m: real2([[0.0, 1.0], [1.0, 0.0]]) }
    }

    /// The real rotation (0 1; -1 0), i.e. i * sigma_y: |g> -> -|e>, |e> -> |g>.
    pub fn i_sigma_y() -> Self {
        Unitary2 { m: real2([[0.0, 1.0], [-1.0, 0.0]]) }
    }

    /// Phase flip |e> -> -|e>.
    pub fn sigma_z() -> Self {
        Unitary2 { m: real2([[1.0, 0.0], [0.0, -1.0]]) }
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[row][col]
    }
}

fn real2(m: [[f64; 2]; 2]) -> [[C64; 2]; 2] {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = C64::new(m[r][c], 0.0);
        }
    }
    out
}

/// A 4x4 two-atom unitary, validated on construction. The row/column
/// index is `2 * bit(first atom) + bit(second atom)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary4 {
    m: [[C64; 4]; 4],
}

impl Unitary4 {
    pub fn new(m: [[C64; 4]; 4]) -> Result<Self, QuantumError> {
        let mut residual: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                let mut dot = C64::new(0.0, 0.0);
                for k in 0..4 {
                    dot += m[k][r].conj() * m[k][c];
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                residual = residual.max((dot - expect).norm());
            }
        }
        if residual > TOL {
            return Err(QuantumError::NotUnitary(residual));
        }
        Ok(Unitary4 { m })
    }

    /// Kronecker product `a (x) b`: `a` acts on the first atom slot.
    pub fn kron(a: &Unitary2, b: &Unitary2) -> Self {
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        for ar in 0..2 {
            for ac in 0..2 {
                for br in 0..2 {
                    for bc in 0..2 {
                        m[2 * ar + br][2 * ac + bc] = a.entry(ar, ac) * b.entry(br, bc);
                    }
                }
            }
        }
        Unitary4 { m }
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[row][col]
    }
}

/// Which projective measurement produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasuredBasis {
    Z,
    X,
    Bell,
}

/// Observed value of a measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementOutcome {
    Kets(Vec<AtomKet>),
    Bell(BellState),
}

/// One projective measurement: which atoms, in which basis, what came out
/// and with what Born probability (the squared norm of the projection of
/// the pre-collapse state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub atoms: Vec<usize>,
    pub basis: MeasuredBasis,
    pub outcome: MeasurementOutcome,
    pub probability: f64,
}

/// Small dense complex matrix (row-major), used for reduced densities.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: C64) {
        self.data[row * self.dim + col] = v;
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest entry-wise distance to another matrix of the same size.
    pub fn max_distance(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "matrix dimensions differ");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Pure state of a small register of two-level atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    atoms: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Product state of the given single-atom kets. Panics on an empty list.
    pub fn from_kets(kets: &[AtomKet]) -> Self {
        assert!(!kets.is_empty(), "a register needs at least one atom");
        let mut amps = vec![C64::new(1.0, 0.0)];
        for ket in kets {
            let [a, b] = ket.amplitudes();
            let mut next = Vec::with_capacity(amps.len() * 2);
            for amp in &amps {
                next.push(amp * a);
                next.push(amp * b);
            }
            amps = next;
        }
        StateVector { atoms: kets.len(), amps }
    }

    /// Wrap an explicit amplitude vector. The length must be a power of
    /// two of at least one atom and the L2 norm must be 1 within tolerance.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, QuantumError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QuantumError::BadLength(len));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(StateVector { atoms: len.trailing_zeros() as usize, amps })
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product <self|other>.
    pub fn inner(&self, other: &StateVector) -> Result<C64, QuantumError> {
        if self.atoms != other.atoms {
            return Err(QuantumError::DimensionMismatch(self.atoms, other.atoms));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product; `self`'s atoms come first.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        StateVector { atoms: self.atoms + other.atoms, amps }
    }

    /// Bit weight of an atom inside the amplitude index.
    fn weight(&self, atom: usize) -> usize {
        1 << (self.atoms - 1 - atom)
    }

    fn check_atom(&self, atom: usize) -> Result<(), QuantumError> {
        if atom >= self.atoms {
            return Err(QuantumError::AtomOutOfRange { index: atom, atoms: self.atoms });
        }
        Ok(())
    }

    fn check_distinct(atoms: &[usize]) -> Result<(), QuantumError> {
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(QuantumError::DuplicateAtom(*a));
            }
        }
        Ok(())
    }

    /// Apply a single-atom unitary in place.
    pub fn apply_1(&mut self, gate: &Unitary2, atom: usize) -> Result<(), QuantumError> {
        self.check_atom(atom)?;
        let w = self.weight(atom);
        for i in 0..self.amps.len() {
            if i & w != 0 {
                continue;
            }
            let j = i | w;
            let (a, b) = (self.amps[i], self.amps[j]);
            self.amps[i] = gate.entry(0, 0) * a + gate.entry(0, 1) * b;
            self.amps[j] = gate.entry(1, 0) * a + gate.entry(1, 1) * b;
        }
        Ok(())
    }

    /// Apply a two-atom unitary in place. The gate's first slot acts on
    /// `atoms.0`, the second on `atoms.1`.
    pub fn apply_2(&mut self, gate: &Unitary4, atoms: (usize, usize)) -> Result<(), QuantumError> {
        self.check_atom(atoms.0)?;
        self.check_atom(atoms.1)?;
        Self::check_distinct(&[atoms.0, atoms.1])?;
        let wa = self.weight(atoms.0);
        let wb = self.weight(atoms.1);
        for i in 0..self.amps.len() {
            if i & (wa | wb) != 0 {
                continue;
            }
            let idx = [i, i | wb, i | wa, i | wa | wb];
            let old = idx.map(|k| self.amps[k]);
            for r in 0..4 {
                let mut v = C64::new(0.0, 0.0);
                for c in 0..4 {
                    v += gate.entry(r, c) * old[c];
                }
                self.amps[idx[r]] = v;
            }
        }
        Ok(())
    }

    /// Project one atom onto one of two orthonormal kets, collapse, and
    /// return (which outcome, probability).
    fn project_single(
        &mut self,
        atom: usize,
        kets: [AtomKet; 2],
        rng: &mut impl Rng,
    ) -> (usize, f64) {
        let w = self.weight(atom);
        let vecs = kets.map(|k| k.amplitudes());
        let mut probs = [0.0f64; 2];
        for i in 0..self.amps.len() {
            if i & w != 0 {
                continue;
            }
            let j = i | w;
            for (k, v) in vecs.iter().enumerate() {
                let c = v[0].conj() * self.amps[i] + v[1].conj() * self.amps[j];
                probs[k] += c.norm_sqr();
            }
        }
        let total = probs[0] + probs[1];
        debug_assert!((total - 1.0).abs() < 1e-9, "Born probabilities sum to {total}");
        let u: f64 = rng.random();
        let outcome = usize::from(u >= probs[0] / total);
        let v = vecs[outcome];
        let scale = 1.0 / probs[outcome].sqrt();
        for i in 0..self.amps.len() {
            if i & w != 0 {
                continue;
            }
            let j = i | w;
            let c = v[0].conj() * self.amps[i] + v[1].conj() * self.amps[j];
            self.amps[i] = v[0] * c * scale;
            self.amps[j] = v[1] * c * scale;
        }
        (outcome, probs[outcome])
    }

    /// Measure the listed atoms in a common basis. Atoms collapse in
    /// place (no reindexing); the record's probability is the joint Born
    /// probability of the observed outcome string.
    pub fn measure(
        &mut self,
        atoms: &[usize],
        basis: Basis,
        rng: &mut impl Rng,
    ) -> Result<MeasurementRecord, QuantumError> {
        for &a in atoms {
            self.check_atom(a)?;
        }
        Self::check_distinct(atoms)?;
        let labels = basis.outcomes();
        let mut kets = Vec::with_capacity(atoms.len());
        let mut probability = 1.0;
        for &a in atoms {
            let (outcome, p) = self.project_single(a, labels, rng);
            kets.push(labels[outcome]);
            probability *= p;
        }
        Ok(MeasurementRecord {
            atoms: atoms.to_vec(),
            basis: match basis {
                Basis::Z => MeasuredBasis::Z,
                Basis::X => MeasuredBasis::X,
            },
            outcome: MeasurementOutcome::Kets(kets),
            probability,
        })
    }

    /// Measure a pair of atoms in the Bell basis. After the collapse the
    /// pair factors out of the register in exactly the measured Bell state.
    pub fn measure_bell(
        &mut self,
        pair: (usize, usize),
        rng: &mut impl Rng,
    ) -> Result<MeasurementRecord, QuantumError> {
        self.check_atom(pair.0)?;
        self.check_atom(pair.1)?;
        Self::check_distinct(&[pair.0, pair.1])?;
        let wa = self.weight(pair.0);
        let wb = self.weight(pair.1);
        let idx_off = [0, wb, wa, wa | wb];
        let mut probs = [0.0f64; 4];
        for i in 0..self.amps.len() {
            if i & (wa | wb) != 0 {
                continue;
            }
            for (k, bell) in BellState::ALL.iter().enumerate() {
                let v = bell.amplitudes();
                let mut c = C64::new(0.0, 0.0);
                for (t, off) in idx_off.iter().enumerate() {
                    c += v[t].conj() * self.amps[i | off];
                }
                probs[k] += c.norm_sqr();
            }
        }
        let total: f64 = probs.iter().sum();
        debug_assert!((total - 1.0).abs() < 1e-9, "Born probabilities sum to {total}");
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = 3;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                chosen = k;
                break;
            }
        }
        let bell = BellState::ALL[chosen];
        let v = bell.amplitudes();
        let scale = 1.0 / probs[chosen].sqrt();
        for i in 0..self.amps.len() {
            if i & (wa | wb) != 0 {
                continue;
            }
            let mut c = C64::new(0.0, 0.0);
            for (t, off) in idx_off.iter().enumerate() {
                c += v[t].conj() * self.amps[i | off];
            }
            for (t, off) in idx_off.iter().enumerate() {
                self.amps[i | off] = v[t] * c * scale;
            }
        }
        Ok(MeasurementRecord {
            atoms: vec![pair.0, pair.1],
            basis: MeasuredBasis::Bell,
            outcome: MeasurementOutcome::Bell(bell),
            probability: probs[chosen],
        })
    }

    /// Reduced density matrix of the listed atoms (in the listed order),
    /// tracing out everything else.
    pub fn reduced_density(&self, atoms: &[usize]) -> Result<CMatrix, QuantumError> {
        for &a in atoms {
            self.check_atom(a)?;
        }
        Self::check_distinct(atoms)?;
        let k = atoms.len();
        let rest: Vec<usize> = (0..self.atoms).filter(|a| !atoms.contains(a)).collect();
        let dim = 1 << k;
        let mut rho = CMatrix::zeros(dim);
        let embed = |sel_bits: usize, rest_bits: usize| -> usize {
            let mut idx = 0;
            for (pos, &a) in atoms.iter().enumerate() {
                if sel_bits >> (k - 1 - pos) & 1 == 1 {
                    idx |= self.weight(a);
                }
            }
            for (pos, &a) in rest.iter().enumerate() {
                if rest_bits >> pos & 1 == 1 {
                    idx |= self.weight(a);
                }
            }
            idx
        };
        for s in 0..dim {
            for t in 0..dim {
                let mut v = C64::new(0.0, 0.0);
                for r in 0..(1usize << rest.len()) {
                    v += self.amps[embed(s, r)] * self.amps[embed(t, r)].conj();
                }
                rho.set(s, t, v);
            }
        }
        Ok(rho)
    }

    /// Remove atoms that have factored out of the register (e.g. after a
    /// collapse), keeping the state of the remaining atoms. Errors if the
    /// atoms are still entangled with the rest or if nothing would remain.
    pub fn discard(&mut self, atoms: &[usize]) -> Result<(), QuantumError> {
        for &a in atoms {
            self.check_atom(a)?;
        }
        Self::check_distinct(atoms)?;
        let keep: Vec<usize> = (0..self.atoms).filter(|a| !atoms.contains(a)).collect();
        if keep.is_empty() {
            return Err(QuantumError::DiscardAll);
        }
        let k = atoms.len();
        let dim_sel = 1usize << k;
        let dim_keep = 1usize << keep.len();
        let embed = |sel_bits: usize, keep_bits: usize| -> usize {
            let mut idx = 0;
            for (pos, &a) in atoms.iter().enumerate() {
                if sel_bits >> (k - 1 - pos) & 1 == 1 {
                    idx |= self.weight(a);
                }
            }
            for (pos, &a) in keep.iter().enumerate() {
                if keep_bits >> (keep.len() - 1 - pos) & 1 == 1 {
                    idx |= self.weight(a);
                }
            }
            idx
        };
        // Pick the discarded configuration with the most weight as pivot.
        let mut pivot = 0;
        let mut best = -1.0;
        for s in 0..dim_sel {
            let w: f64 = (0..dim_keep).map(|r| self.amps[embed(s, r)].norm_sqr()).sum();
            if w > best {
                best = w;
                pivot = s;
            }
        }
        let keep_norm = best.sqrt();
        let kept: Vec<C64> =
            (0..dim_keep).map(|r| self.amps[embed(pivot, r)] / keep_norm).collect();
        // The state factors iff every discarded configuration's slice is a
        // scalar multiple of the pivot slice.
        for s in 0..dim_sel {
            let mut coeff = C64::new(0.0, 0.0);
            for r in 0..dim_keep {
                coeff += kept[r].conj() * self.amps[embed(s, r)];
            }
            for r in 0..dim_keep {
                let expect = coeff * kept[r];
                if (self.amps[embed(s, r)] - expect).norm() > TOL {
                    return Err(QuantumError::DiscardEntangled(atoms.to_vec()));
                }
            }
        }
        self.atoms = keep.len();
        self.amps = kept;
        let n = self.norm();
        for a in &mut self.amps {
            *a /= n;
        }
        Ok(())
    }
}

/// Whether two states are the same physical state, i.e. equal up to a
/// global phase: |<a|b>| >= 1 - tol.
pub fn equal_up_to_global_phase(
    a: &StateVector,
    b: &StateVector,
    tol: f64,
) -> Result<bool, QuantumError> {
    let overlap = a.inner(b)?.norm();
    Ok(overlap >= 1.0 - tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_close(a: C64, b: C64) {
        assert!((a - b).norm() <= TOL, "{a} != {b}");
    }

    #[test]
    fn product_states_have_expected_amplitudes() {
        let gg = StateVector::from_kets(&[AtomKet::G, AtomKet::G]);
        assert_eq!(gg.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let gp = StateVector::from_kets(&[AtomKet::G, AtomKet::Plus]);
        assert_close(gp.amplitudes()[0], c(h, 0.0));
        assert_close(gp.amplitudes()[1], c(h, 0.0));
        assert_close(gp.amplitudes()[2], c(0.0, 0.0));

        let m = StateVector::from_kets(&[AtomKet::Minus]);
        assert_close(m.amplitudes()[1], c(-h, 0.0));
    }

    #[test]
    fn amplitude_constructor_validates() {
        assert_eq!(
            StateVector::from_amplitudes(vec![c(1.0, 0.0); 3]).unwrap_err(),
            QuantumError::BadLength(3)
        );
        assert!(matches!(
            StateVector::from_amplitudes(vec![c(0.9, 0.0), c(0.0, 0.0)]),
            Err(QuantumError::NotNormalized(_))
        ));
        let ok = StateVector::from_amplitudes(vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(ok.num_atoms(), 1);
    }

    #[test]
    fn tensor_orders_atoms_left_to_right() {
        let ge = StateVector::from_kets(&[AtomKet::G]).tensor(&StateVector::from_kets(&[AtomKet::E]));
        assert_close(ge.amplitudes()[1], c(1.0, 0.0));
        assert_eq!(ge.num_atoms(), 2);

        // Two Bell pairs tensored: 1/2 on the four doubled configurations.
        let pair = BellState::PhiPlus.state_vector();
        let four = pair.tensor(&pair);
        for (i, amp) in four.amplitudes().iter().enumerate() {
            let expect = matches!(i, 0b0000 | 0b0011 | 0b1100 | 0b1111);
            assert_close(*amp, if expect { c(0.5, 0.0) } else { c(0.0, 0.0) });
        }
    }

    #[test]
    fn single_atom_gates_act_on_the_addressed_atom() {
        let mut s = StateVector::from_kets(&[AtomKet::G, AtomKet::G]);
        s.apply_1(&Unitary2::sigma_x(), 0).unwrap();
        assert_close(s.amplitudes()[0b10], c(1.0, 0.0));

        let mut s = StateVector::from_kets(&[AtomKet::G, AtomKet::G]);
        s.apply_1(&Unitary2::sigma_x(), 1).unwrap();
        assert_close(s.amplitudes()[0b01], c(1.0, 0.0));

        let mut s = StateVector::from_kets(&[AtomKet::E]);
        s.apply_1(&Unitary2::sigma_z(), 0).unwrap();
        assert_close(s.amplitudes()[1], c(-1.0, 0.0));

        // i*sigma_y sends |g> to -|e>.
        let mut s = StateVector::from_kets(&[AtomKet::G]);
        s.apply_1(&Unitary2::i_sigma_y(), 0).unwrap();
        assert_close(s.amplitudes()[1], c(-1.0, 0.0));
    }

    #[test]
    fn gate_errors_are_reported() {
        let mut s = StateVector::from_kets(&[AtomKet::G]);
        assert_eq!(
            s.apply_1(&Unitary2::identity(), 1).unwrap_err(),
            QuantumError::AtomOutOfRange { index: 1, atoms: 1 }
        );
        let not_unitary = Unitary2::new(real2([[1.0, 0.0], [0.0, 2.0]]));
        assert!(matches!(not_unitary, Err(QuantumError::NotUnitary(_))));
        let mut s = StateVector::from_kets(&[AtomKet::G, AtomKet::G]);
        let id4 = Unitary4::kron(&Unitary2::identity(), &Unitary2::identity());
        assert_eq!(s.apply_2(&id4, (1, 1)).unwrap_err(), QuantumError::DuplicateAtom(1));
    }

    #[test]
    fn two_atom_gate_slots_follow_argument_order() {
        // kron(sigma_x, id) applied to (1, 0) must flip atom 1.
        let gate = Unitary4::kron(&Unitary2::sigma_x(), &Unitary2::identity());
        let mut s = StateVector::from_kets(&[AtomKet::G, AtomKet::G, AtomKet::G]);
        s.apply_2(&gate, (1, 0)).unwrap();
        assert_close(s.amplitudes()[0b010], c(1.0, 0.0));

        // Against the equivalent single-atom path.
        let mut direct = StateVector::from_kets(&[AtomKet::G, AtomKet::G, AtomKet::G]);
        direct.apply_1(&Unitary2::sigma_x(), 1).unwrap();
        assert_eq!(s.amplitudes(), direct.amplitudes());
    }

    #[test]
    fn eigenstate_measurements_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = StateVector::from_kets(&[AtomKet::E, AtomKet::Plus]);
        let rec = s.measure(&[0], Basis::Z, &mut rng).unwrap();
        assert_eq!(rec.outcome, MeasurementOutcome::Kets(vec![AtomKet::E]));
        assert!((rec.probability - 1.0).abs() <= TOL);
        let rec = s.measure(&[1], Basis::X, &mut rng).unwrap();
        assert_eq!(rec.outcome, MeasurementOutcome::Kets(vec![AtomKet::Plus]));
        assert!((rec.probability - 1.0).abs() <= TOL);
    }

    #[test]
    fn entangled_pairs_yield_their_basis_correlations() {
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = BellState::PhiPlus.state_vector();
            let rec = s.measure(&[0, 1], Basis::Z, &mut rng).unwrap();
            let MeasurementOutcome::Kets(kets) = &rec.outcome else { panic!() };
            assert_eq!(kets[0], kets[1], "phi+ is Z-correlated");
            assert!((rec.probability - 0.5).abs() <= TOL);

            let mut s = BellState::PsiMinus.state_vector();
            let rec = s.measure(&[0, 1], Basis::X, &mut rng).unwrap();
            let MeasurementOutcome::Kets(kets) = &rec.outcome else { panic!() };
            assert_ne!(kets[0], kets[1], "psi- is X-anticorrelated");
        }
    }

    #[test]
    fn measurement_frequencies_match_born_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut excited = 0;
        let trials = 4000;
        for _ in 0..trials {
            let mut s = StateVector::from_kets(&[AtomKet::Plus]);
            let rec = s.measure(&[0], Basis::Z, &mut rng).unwrap();
            if rec.outcome == MeasurementOutcome::Kets(vec![AtomKet::E]) {
                excited += 1;
            }
        }
        // 4 sigma around p = 1/2.
        let sigma = (0.25f64 / trials as f64).sqrt();
        assert!((excited as f64 / trials as f64 - 0.5).abs() < 4.0 * sigma);
    }

    #[test]
    fn collapse_renormalizes_in_place() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = BellState::PhiPlus.state_vector().tensor(&StateVector::from_kets(&[AtomKet::Plus]));
        s.measure(&[0], Basis::Z, &mut rng).unwrap();
        assert_eq!(s.num_atoms(), 3, "collapse must not drop atoms");
        assert!((s.norm() - 1.0).abs() <= TOL);
    }

    #[test]
    fn bell_measurement_of_a_product_pair_splits_evenly() {
        // |gg> overlaps only the two Z-correlated Bell states, 1/2 each.
        let mut counts = [0usize; 4];
        for seed in 0..400 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = StateVector::from_kets(&[AtomKet::G, AtomKet::G]);
            let rec = s.measure_bell((0, 1), &mut rng).unwrap();
            assert!((rec.probability - 0.5).abs() <= TOL);
            let MeasurementOutcome::Bell(b) = rec.outcome else { panic!() };
            counts[BellState::ALL.iter().position(|x| *x == b).unwrap()] += 1;
            // Post-measurement state is exactly the measured Bell state.
            assert!(equal_up_to_global_phase(&s, &b.state_vector(), TOL).unwrap());
        }
        assert_eq!(counts[2] + counts[3], 0, "|gg> never projects onto psi+/psi-");
        assert!(counts[0] > 100 && counts[1] > 100);
    }

    #[test]
    fn bell_measurement_of_an_eigenstate_is_deterministic() {
        for bell in BellState::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let mut s = bell.state_vector();
            let rec = s.measure_bell((0, 1), &mut rng).unwrap();
            assert_eq!(rec.outcome, MeasurementOutcome::Bell(bell));
            assert!((rec.probability - 1.0).abs() <= TOL);
        }
    }

    #[test]
    fn bell_measurement_disentangles_the_pair_from_bystanders() {
        // Entangle three atoms, Bell-measure a pair, and check the pair
        // factors out exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = BellState::PhiPlus.state_vector().tensor(&StateVector::from_kets(&[AtomKet::G]));
        // Correlate atom 2 with atom 1 via an entangling rotation.
        let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let cnot_like = Unitary4::new([
            [one, zero, zero, zero],
            [zero, one, zero, zero],
            [zero, zero, half, half],
            [zero, zero, half, -half],
        ])
        .unwrap();
        s.apply_2(&cnot_like, (1, 2)).unwrap();
        let rec = s.measure_bell((0, 1), &mut rng).unwrap();
        let MeasurementOutcome::Bell(b) = rec.outcome else { panic!() };
        let rho = s.reduced_density(&[0, 1]).unwrap();
        // Pure |b><b| on the pair.
        let v = b.amplitudes();
        let mut expect = CMatrix::zeros(4);
        for r in 0..4 {
            for c_ in 0..4 {
                expect.set(r, c_, v[r] * v[c_].conj());
            }
        }
        assert!(rho.max_distance(&expect) <= TOL);
    }

    #[test]
    fn reduced_density_of_a_bell_half_is_maximally_mixed() {
        for bell in BellState::ALL {
            let s = bell.state_vector();
            for atom in 0..2 {
                let rho = s.reduced_density(&[atom]).unwrap();
                assert_close(rho.get(0, 0), c(0.5, 0.0));
                assert_close(rho.get(1, 1), c(0.5, 0.0));
                assert_close(rho.get(0, 1), c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn reduced_density_of_a_product_atom_is_its_projector() {
        let s = StateVector::from_kets(&[AtomKet::G, AtomKet::Plus]);
        let rho = s.reduced_density(&[1]).unwrap();
        assert_close(rho.get(0, 0), c(0.5, 0.0));
        assert_close(rho.get(0, 1), c(0.5, 0.0));
        assert_close(rho.get(1, 0), c(0.5, 0.0));
        assert_close(rho.get(1, 1), c(0.5, 0.0));
        assert_close(rho.trace(), c(1.0, 0.0));
    }

    #[test]
    fn discard_removes_factored_atoms_only() {
        let mut s = StateVector::from_kets(&[AtomKet::E]).tensor(&BellState::PsiMinus.state_vector());
        s.discard(&[0]).unwrap();
        assert!(equal_up_to_global_phase(&s, &BellState::PsiMinus.state_vector(), TOL).unwrap());

        let mut entangled = BellState::PhiPlus.state_vector();
        assert_eq!(
            entangled.discard(&[0]).unwrap_err(),
            QuantumError::DiscardEntangled(vec![0])
        );

        let mut lone = StateVector::from_kets(&[AtomKet::G]);
        assert_eq!(lone.discard(&[0]).unwrap_err(), QuantumError::DiscardAll);
    }

    #[test]
    fn discard_after_collapse_shrinks_the_register() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = BellState::PhiPlus.state_vector();
        s.measure(&[0], Basis::Z, &mut rng).unwrap();
        s.discard(&[0]).unwrap();
        assert_eq!(s.num_atoms(), 1);
        assert!((s.norm() - 1.0).abs() <= TOL);
    }

    #[test]
    fn global_phase_comparison() {
        let a = BellState::PhiMinus.state_vector();
        let mut b = BellState::PhiMinus.state_vector();
        // Multiply by a phase e^{i 0.7}.
        let phase = C64::from_polar(1.0, 0.7);
        let amps: Vec<C64> = b.amplitudes().iter().map(|x| x * phase).collect();
        b = StateVector::from_amplitudes(amps).unwrap();
        assert!(equal_up_to_global_phase(&a, &b, TOL).unwrap());
        assert!(!equal_up_to_global_phase(&a, &BellState::PsiPlus.state_vector(), TOL).unwrap());
        let single = StateVector::from_kets(&[AtomKet::G]);
        assert_eq!(
            equal_up_to_global_phase(&a, &single, TOL).unwrap_err(),
            QuantumError::DimensionMismatch(2, 1)
        );
    }

    #[test]
    fn gates_preserve_the_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // A scrambled but normalized 3-atom state.
        let mut s = StateVector::from_kets(&[AtomKet::Plus, AtomKet::G, AtomKet::Minus]);
        let gates = [Unitary2::sigma_x(), Unitary2::i_sigma_y(), Unitary2::sigma_z()];
        for step in 0..50 {
            let atom = rng.random_range(0..3);
            s.apply_1(&gates[step % 3], atom).unwrap();
            assert!((s.norm() - 1.0).abs() <= TOL, "norm drifted at step {step}");
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_records() {
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = BellState::PsiPlus.state_vector();
            let first = s.measure(&[0], Basis::X, &mut rng).unwrap();
            let second = s.measure(&[1], Basis::X, &mut rng).unwrap();
            (first, second)
        };
        assert_eq!(run(1234), run(1234));
    }
}
