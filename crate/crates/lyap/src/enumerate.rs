//! The admissible operation sequences and grouping of identical pairs.
//!
//! A sequence is A1 followed by one choice from each of five stages
//! (B, C, D, M, D), giving 1·10·2·13·7·13 = 23660 sequences.

use crate::pq_core::{initial_pair, OdeSystemSpec, OpError, OperationId, PQPair};
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt;
use OperationId::*;

pub const B_STAGE: [&[OperationId]; 10] = [
    &[],
    &[B1],
    &[B2],
    &[B1, B2],
    &[B3],
    &[B1, B3],
    &[B2, B3],
    &[B1, B2, B3],
    &[B3, B2],
    &[B1, B3, B2],
];

pub const C_STAGE: [&[OperationId]; 2] = [&[], &[C1]];

pub const D_STAGE: [&[OperationId]; 13] = [
    &[],
    &[D1],
    &[D2],
    &[D3],
    &[D4],
    &[D1, D3],
    &[D1, D4],
    &[D2, D3],
    &[D2, D4],
    &[D3, D1],
    &[D3, D2],
    &[D1, D3, D2],
    &[D2, D3, D1],
];

pub const M_STAGE: [&[OperationId]; 7] = [
    &[],
    &[E1],
    &[F1],
    &[E1, F1],
    &[E1, D3, D2, F1],
    &[F1, D2, D3, E1],
    &[F1, D2, D3, D1, E1, D3, D2, F1],
];

/// Equalities between operation words (applied left to right) that justify
/// the stage tables. Each holds on every pair, not only reachable ones.
pub const REDUCTION_IDENTITIES: [(&[OperationId], &[OperationId]); 18] = [
    (&[E1, D1], &[D1, E1]),
    (&[E1, D2], &[D2, E1]),
    (&[E1, D4], &[E1]),
    (&[D4, E1], &[D4]),
    (&[F1, D3], &[D3, F1]),
    (&[F1, D4], &[D4, F1]),
    (&[F1, D1], &[F1]),
    (&[D1, F1], &[D1]),
    (&[E1, F1], &[F1, E1]),
    (&[E1, D3, E1], &[D3, E1]),
    (&[F1, D2, F1], &[D2, F1]),
    (&[D2, D3, D2], &[D2, D3]),
    (&[D2, F1, D2], &[D2, F1]),
    (&[D3, E1, D3], &[D3, E1]),
    (&[D1, D2], &[D2]),
    (&[D2, D1], &[D1]),
    (&[D3, D4], &[D4]),
    (&[D4, D3], &[D3]),
];

pub const TOTAL: usize = 10 * 2 * 13 * 7 * 13;

/// Indices into the stage tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperationSequence {
    pub b: u8,
    pub c: u8,
    pub d1: u8,
    pub m: u8,
    pub d2: u8,
}

impl OperationSequence {
    pub fn ops(&self) -> Vec<OperationId> {
        let mut v = vec![A1];
        v.extend_from_slice(B_STAGE[self.b as usize]);
        v.extend_from_slice(C_STAGE[self.c as usize]);
        v.extend_from_slice(D_STAGE[self.d1 as usize]);
        v.extend_from_slice(M_STAGE[self.m as usize]);
        v.extend_from_slice(D_STAGE[self.d2 as usize]);
        v
    }

    /// Position in [`generate_sequences`] order.
    pub fn index(&self) -> usize {
        (((self.b as usize * 2 + self.c as usize) * 13 + self.d1 as usize) * 7 + self.m as usize)
            * 13
            + self.d2 as usize
    }

    /// Stage decomposition of an explicit op list, if it is admissible.
    pub fn from_ops(ops: &[OperationId]) -> Option<OperationSequence> {
        generate_sequences().into_iter().find(|s| s.ops() == ops)
    }
}

impl fmt::Display for OperationSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.ops().iter().map(|o| o.name()).collect();
        f.write_str(&names.join(">"))
    }
}

pub fn generate_sequences() -> Vec<OperationSequence> {
    let mut out = Vec::with_capacity(TOTAL);
    for b in 0..10u8 {
        for c in 0..2u8 {
            for d1 in 0..13u8 {
                for m in 0..7u8 {
                    for d2 in 0..13u8 {
                        out.push(OperationSequence { b, c, d1, m, d2 });
                    }
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct PairGroup {
    pub group_id: usize,
    pub representative: PQPair,
    pub members: Vec<OperationSequence>,
}

/// Groups plus counts for reporting.
#[derive(Clone, Debug)]
pub struct Enumeration {
    pub system: String,
    pub groups: Vec<PairGroup>,
    pub raw_count: usize,
    pub max_gamma_order: u32,
}

fn apply_all(base: &[PQPair], stage: &[&[OperationId]]) -> Result<Vec<PQPair>, OpError> {
    base.par_iter()
        .flat_map_iter(|p| stage.iter().map(move |ops| p.apply_sequence(ops)))
        .collect()
}

/// Pairs for every sequence, in [`generate_sequences`] order. Shared prefixes
/// are applied once.
pub fn all_pairs(spec: &OdeSystemSpec) -> Result<Vec<PQPair>, OpError> {
    let a = vec![initial_pair(spec).apply(A1)?];
    let b = apply_all(&a, &B_STAGE)?;
    let c = apply_all(&b, &C_STAGE)?;
    let d1 = apply_all(&c, &D_STAGE)?;
    let m = apply_all(&d1, &M_STAGE)?;
    apply_all(&m, &D_STAGE)
}

pub fn enumerate_pairs(spec: &OdeSystemSpec) -> Result<Vec<PairGroup>, OpError> {
    Ok(enumerate(spec)?.groups)
}

pub fn enumerate(spec: &OdeSystemSpec) -> Result<Enumeration, OpError> {
    let seqs = generate_sequences();
    let pairs = all_pairs(spec)?;
    debug_assert_eq!(seqs.len(), pairs.len());
    let mut index: HashMap<&PQPair, usize> = HashMap::new();
    let mut groups: Vec<PairGroup> = Vec::new();
    for (s, p) in seqs.iter().zip(&pairs) {
        match index.get(p) {
            Some(&g) => groups[g].members.push(*s),
            None => {
                index.insert(p, groups.len());
                groups.push(PairGroup {
                    group_id: groups.len(),
                    representative: p.clone(),
                    members: vec![*s],
                });
            }
        }
    }
    let max_gamma_order = groups.iter().map(|g| g.representative.max_gamma_order()).max().unwrap_or(0);
    Ok(Enumeration { system: spec.name.clone(), groups, raw_count: seqs.len(), max_gamma_order })
}

/// The group whose representative equals `pair`, if any.
pub fn find_group<'a>(groups: &'a [PairGroup], pair: &PQPair) -> Option<&'a PairGroup> {
    groups.iter().find(|g| &g.representative == pair)
}

pub fn write_groups_csv<W: std::io::Write>(
    w: W,
    enumeration: &Enumeration,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["group_id", "member_count", "representative_ops", "sketch"])?;
    for g in &enumeration.groups {
        w.write_record([
            g.group_id.to_string(),
            g.members.len().to_string(),
            g.members[0].to_string(),
            g.representative.sketch(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn count_and_extremes() {
        let s = generate_sequences();
        assert_eq!(s.len(), 23660);
        assert_eq!(s[0].ops(), vec![A1]);
        let big: Vec<OperationId> = [
            &[A1][..],
            &[B1, B2, B3],
            &[C1],
            &[D2, D3, D1],
            &[F1, D2, D3, D1, E1, D3, D2, F1],
            &[D1, D3, D2],
        ]
        .concat();
        let hits: Vec<_> = s.iter().filter(|q| q.ops() == big).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(*hits[0], OperationSequence { b: 7, c: 1, d1: 12, m: 6, d2: 11 });
    }

    #[test]
    fn index_roundtrip() {
        for (i, s) in generate_sequences().iter().enumerate() {
            assert_eq!(s.index(), i);
        }
    }

    #[test]
    fn stage_lists_distinct() {
        fn distinct(v: &[&[OperationId]]) -> bool {
            let mut w: Vec<_> = v.to_vec();
            w.sort();
            w.dedup();
            w.len() == v.len()
        }
        assert!(distinct(&B_STAGE) && distinct(&D_STAGE) && distinct(&M_STAGE));
    }

    #[test]
    fn grouping_is_deterministic() {
        let a = enumerate_pairs(&catalog::nag()).unwrap();
        let b = enumerate_pairs(&catalog::nag()).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.members, y.members);
            assert_eq!(x.representative, y.representative);
        }
    }

    #[test]
    fn members_reproduce_representative() {
        let spec = catalog::damped_newton();
        let groups = enumerate_pairs(&spec).unwrap();
        let init = initial_pair(&spec);
        for g in &groups {
            for m in g.members.iter().step_by(97) {
                assert_eq!(init.apply_sequence(&m.ops()).unwrap(), g.representative);
            }
        }
    }
}
