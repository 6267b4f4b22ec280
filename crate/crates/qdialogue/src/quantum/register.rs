//! Handle-based registry over many small state vectors.
//!
//! A protocol session touches dozens of atoms, but its joint state always
//! factors into small independent subsystems (a group of two Bell pairs,
//! a check-sample pair, a lone decoy, an eavesdropper ancilla). Holding
//! one dense vector over everything would be exponential for no reason,
//! so [`Register`] stores one [`StateVector`] per factor and merges two
//! factors only when a two-atom gate or Bell measurement actually couples
//! them. An [`Atom`] handle stays valid for the whole session regardless
//! of merges; single-atom measurements collapse in place and never move
//! atoms between factors.

use rand::Rng;

use crate::bell::BellState;
use crate::quantum::{
    Basis, CMatrix, MeasurementRecord, QuantumError, StateVector, Unitary2, Unitary4,
};

/// Stable handle to one atom in a [`Register`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom(usize);

impl Atom {
    /// Numeric id, usable as a log/join key.
    pub fn id(self) -> usize {
        self.0
    }
}

/// A collection of independent subsystems addressed by atom handles.
#[derive(Debug, Clone, Default)]
pub struct Register {
    parts: Vec<Option<StateVector>>,
    members: Vec<Vec<Atom>>,
    // Atom id -> (part index, position inside the part).
    loc: Vec<(usize, usize)>,
}

impl Register {
    pub fn new() -> Self {
        Register::default()
    }

    /// Adopt a state as a new independent subsystem; returns one handle
    /// per atom, in the state's atom order.
    pub fn add(&mut self, state: StateVector) -> Vec<Atom> {
        let part = self.parts.len();
        let atoms: Vec<Atom> = (0..state.num_atoms())
            .map(|pos| {
                let atom = Atom(self.loc.len());
                self.loc.push((part, pos));
                atom
            })
            .collect();
        self.parts.push(Some(state));
        self.members.push(atoms.clone());
        atoms
    }

    /// Convenience: add a fresh two-atom Bell pair.
    pub fn add_bell(&mut self, bell: BellState) -> (Atom, Atom) {
        let atoms = self.add(bell.state_vector());
        (atoms[0], atoms[1])
    }

    fn part_of(&self, atom: Atom) -> usize {
        self.loc[atom.id()].0
    }

    fn position_of(&self, atom: Atom) -> usize {
        self.loc[atom.id()].1
    }

    fn part_mut(&mut self, idx: usize) -> &mut StateVector {
        self.parts[idx].as_mut().expect("merged-away part is never addressed")
    }

    /// Number of live (unmerged) subsystems; exposed for tests.
    pub fn num_parts(&self) -> usize {
        self.parts.iter().filter(|p| p.is_some()).count()
    }

    /// The subsystem an atom currently lives in, with its member handles
    /// in state order. The returned state is a snapshot.
    pub fn subsystem(&self, atom: Atom) -> (StateVector, Vec<Atom>) {
        let part = self.part_of(atom);
        (
            self.parts[part].clone().expect("live part"),
            self.members[part].clone(),
        )
    }

    /// Tensor two subsystems together so that both atoms share one part.
    fn merge(&mut self, a: Atom, b: Atom) {
        let pa = self.part_of(a);
        let pb = self.part_of(b);
        if pa == pb {
            return;
        }
        let sa = self.parts[pa].take().expect("live part");
        let sb = self.parts[pb].take().expect("live part");
        let offset = sa.num_atoms();
        let combined = sa.tensor(&sb);
        let moved = std::mem::take(&mut self.members[pb]);
        for (pos, atom) in moved.iter().enumerate() {
            self.loc[atom.id()] = (pa, offset + pos);
        }
        self.members[pa].extend(moved);
        self.parts[pa] = Some(combined);
    }

    pub fn apply_1(&mut self, gate: &Unitary2, atom: Atom) -> Result<(), QuantumError> {
        let part = self.part_of(atom);
        let pos = self.position_of(atom);
        self.part_mut(part).apply_1(gate, pos)
    }

    pub fn apply_2(&mut self, gate: &Unitary4, a: Atom, b: Atom) -> Result<(), QuantumError> {
        self.merge(a, b);
        let part = self.part_of(a);
        let (pa, pb) = (self.position_of(a), self.position_of(b));
        self.part_mut(part).apply_2(gate, (pa, pb))
    }

    /// Measure a single atom; the record's `atoms` field carries the
    /// handle id rather than a vector index.
    pub fn measure(
        &mut self,
        atom: Atom,
        basis: Basis,
        rng: &mut impl Rng,
    ) -> Result<MeasurementRecord, QuantumError> {
        let part = self.part_of(atom);
        let pos = self.position_of(atom);
        let mut record = self.part_mut(part).measure(&[pos], basis, rng)?;
        record.atoms = vec![atom.id()];
        Ok(record)
    }

    /// Bell-measure a pair, merging subsystems if required.
    pub fn measure_bell(
        &mut self,
        a: Atom,
        b: Atom,
        rng: &mut impl Rng,
    ) -> Result<MeasurementRecord, QuantumError> {
        self.merge(a, b);
        let part = self.part_of(a);
        let (pa, pb) = (self.position_of(a), self.position_of(b));
        let mut record = self.part_mut(part).measure_bell((pa, pb), rng)?;
        record.atoms = vec![a.id(), b.id()];
        Ok(record)
    }

    /// Reduced density matrix of one atom.
    pub fn reduced_density(&self, atom: Atom) -> CMatrix {
        let part = self.part_of(atom);
        let pos = self.position_of(atom);
        self.parts[part]
            .as_ref()
            .expect("live part")
            .reduced_density(&[pos])
            .expect("position is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{AtomKet, MeasurementOutcome};
    use crate::TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parts_stay_separate_until_coupled() {
        let mut reg = Register::new();
        let (a1, _b1) = reg.add_bell(BellState::PhiPlus);
        let (a2, _b2) = reg.add_bell(BellState::PhiPlus);
        assert_eq!(reg.num_parts(), 2);
        let gate = Unitary4::kron(&Unitary2::identity(), &Unitary2::identity());
        reg.apply_2(&gate, a1, a2).unwrap();
        assert_eq!(reg.num_parts(), 1);
        let (state, members) = reg.subsystem(a1);
        assert_eq!(state.num_atoms(), 4);
        assert_eq!(members.len(), 4);
    }

    #[test]
    fn merged_gate_application_matches_direct_construction() {
        // sigma_x on the first atom of the second pair, applied through a
        // merged two-atom identity-otherwise gate, must equal building the
        // four-atom state directly.
        let mut reg = Register::new();
        let (a1, _) = reg.add_bell(BellState::PsiMinus);
        let (a2, _) = reg.add_bell(BellState::PhiPlus);
        let flip_second = Unitary4::kron(&Unitary2::identity(), &Unitary2::sigma_x());
        reg.apply_2(&flip_second, a1, a2).unwrap();

        let mut direct = BellState::PsiMinus
            .state_vector()
            .tensor(&BellState::PhiPlus.state_vector());
        direct.apply_1(&Unitary2::sigma_x(), 2).unwrap();
        let (merged, _) = reg.subsystem(a1);
        let overlap = merged.inner(&direct).unwrap();
        assert!((overlap.norm() - 1.0).abs() <= TOL);
    }

    #[test]
    fn handles_survive_merges() {
        let mut reg = Register::new();
        let (a, b) = reg.add_bell(BellState::PhiPlus);
        let lone = reg.add(StateVector::from_kets(&[AtomKet::E]))[0];
        let gate = Unitary4::kron(&Unitary2::identity(), &Unitary2::identity());
        reg.apply_2(&gate, b, lone).unwrap();
        // The lone atom keeps its identity: measuring it still yields |e>.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rec = reg.measure(lone, Basis::Z, &mut rng).unwrap();
        assert_eq!(rec.outcome, MeasurementOutcome::Kets(vec![AtomKet::E]));
        assert_eq!(rec.atoms, vec![lone.id()]);
        // And the pair is still phi+ correlated.
        let ra = reg.measure(a, Basis::Z, &mut rng).unwrap();
        let rb = reg.measure(b, Basis::Z, &mut rng).unwrap();
        assert_eq!(ra.outcome, rb.outcome);
    }

    #[test]
    fn cross_part_bell_measurement_merges_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut reg = Register::new();
        let g = reg.add(StateVector::from_kets(&[AtomKet::G]))[0];
        let g2 = reg.add(StateVector::from_kets(&[AtomKet::G]))[0];
        let rec = reg.measure_bell(g, g2, &mut rng).unwrap();
        let MeasurementOutcome::Bell(b) = rec.outcome else { panic!() };
        assert!(b.is_phi(), "|gg> only overlaps the phi states");
        assert!((rec.probability - 0.5).abs() <= TOL);
    }

    #[test]
    fn reduced_density_addresses_the_right_atom() {
        let mut reg = Register::new();
        reg.add(StateVector::from_kets(&[AtomKet::G]));
        let e = reg.add(StateVector::from_kets(&[AtomKet::E]))[0];
        let rho = reg.reduced_density(e);
        assert!((rho.get(1, 1).re - 1.0).abs() <= TOL);
    }
}
