use proptest::prelude::*;
use qbm_chimera::{
    full_coupler_counts, ChimeraTopology, CouplerKind, QubitCoord, Side, TopologyError,
};

/// Brute-force edge predicate built straight from the coordinate rules,
/// independent of the library's edge generator.
fn oracle_edge(rows: usize, cols: usize, i: usize, j: usize) -> Option<CouplerKind> {
    let decode = |q: usize| {
        let cell = q / 8;
        (cell / cols, cell % cols, (q % 8) / 4, q % 4)
    };
    let _ = rows;
    let (r1, c1, s1, o1) = decode(i);
    let (r2, c2, s2, o2) = decode(j);
    if r1 == r2 && c1 == c2 && s1 != s2 {
        return Some(CouplerKind::Intra);
    }
    if s1 == s2 && o1 == o2 {
        let vertical = s1 == 0 && c1 == c2 && r1.abs_diff(r2) == 1;
        let horizontal = s1 == 1 && r1 == r2 && c1.abs_diff(c2) == 1;
        if vertical || horizontal {
            return Some(CouplerKind::Inter);
        }
    }
    None
}

fn oracle_counts(rows: usize, cols: usize, inactive: &[usize]) -> (usize, usize) {
    let n = rows * cols * 8;
    let (mut intra, mut inter) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            if inactive.contains(&i) || inactive.contains(&j) {
                continue;
            }
            match oracle_edge(rows, cols, i, j) {
                Some(CouplerKind::Intra) => intra += 1,
                Some(CouplerKind::Inter) => inter += 1,
                None => {}
            }
        }
    }
    (intra, inter)
}

#[test]
fn eight_by_eight_counts() {
    let t = ChimeraTopology::new(8, 8, &[]).unwrap();
    assert_eq!(t.num_qubits(), 512);
    assert_eq!(t.count_couplers(CouplerKind::Intra), 1024);
    assert_eq!(t.count_couplers(CouplerKind::Inter), 448);
    assert_eq!(oracle_counts(8, 8, &[]), (1024, 448));
}

#[test]
fn three_by_three_counts() {
    let t = ChimeraTopology::new(3, 3, &[]).unwrap();
    assert_eq!(t.num_qubits(), 72);
    assert_eq!(t.count_couplers(CouplerKind::Intra), 144);
    assert_eq!(t.count_couplers(CouplerKind::Inter), 48);
    assert_eq!(oracle_counts(3, 3, &[]), (144, 48));
}

#[test]
fn interior_and_corner_degrees() {
    let t = ChimeraTopology::new(8, 8, &[]).unwrap();
    let interior = t
        .index(QubitCoord {
            row: 3,
            col: 4,
            side: Side::High,
            offset: 2,
        })
        .unwrap();
    assert_eq!(t.neighbors(interior).unwrap().len(), 6);
    for q in 0..8 {
        assert_eq!(t.neighbors(q).unwrap().len(), 5, "corner qubit {q}");
    }
    // Oracle agreement on every qubit's neighbor set.
    for q in 0..t.num_qubits() {
        let mut expect: Vec<usize> = (0..512)
            .filter(|&j| j != q && oracle_edge(8, 8, q.min(j), q.max(j)).is_some())
            .collect();
        let mut got = t.neighbors(q).unwrap();
        expect.sort();
        got.sort();
        assert_eq!(got, expect);
    }
}

#[test]
fn neighbors_rejects_bad_qubits() {
    let t = ChimeraTopology::new(2, 2, &[3]).unwrap();
    assert_eq!(t.neighbors(3), Err(TopologyError::InactiveQubit(3)));
    assert!(matches!(
        t.neighbors(32),
        Err(TopologyError::QubitOutOfRange { .. })
    ));
}

#[test]
fn disjoint_couplers_cover_full_grid() {
    let t = ChimeraTopology::new(8, 8, &[]).unwrap();
    let pairs = t.disjoint_couplers();
    assert_eq!(pairs.len(), 256);
    let mut seen = vec![false; 512];
    for (a, b) in pairs {
        assert!(t.coupler_between(a, b).is_some());
        assert!(!seen[a] && !seen[b]);
        seen[a] = true;
        seen[b] = true;
    }
}

#[test]
fn spec_round_trip() {
    let t = ChimeraTopology::new(2, 3, &[5, 1]).unwrap();
    let spec = t.spec();
    assert_eq!(spec.inactive, vec![1, 5]);
    assert_eq!(ChimeraTopology::from_spec(&spec).unwrap(), t);
}

fn grid_with_mask() -> impl Strategy<Value = (usize, usize, Vec<usize>)> {
    (1usize..5, 1usize..5).prop_flat_map(|(r, c)| {
        let n = r * c * 8;
        (Just(r), Just(c), proptest::collection::vec(0..n, 0..6))
    })
}

proptest! {
    #[test]
    fn counts_match_closed_form(rows in 1usize..7, cols in 1usize..7) {
        let t = ChimeraTopology::new(rows, cols, &[]).unwrap();
        let (intra, inter) = full_coupler_counts(rows, cols);
        prop_assert_eq!(t.count_couplers(CouplerKind::Intra), intra);
        prop_assert_eq!(t.count_couplers(CouplerKind::Inter), inter);
        prop_assert_eq!(intra, 16 * rows * cols);
        prop_assert_eq!(inter, 4 * (rows - 1) * cols + 4 * rows * (cols - 1));
    }

    #[test]
    fn masked_counts_match_oracle((rows, cols, mask) in grid_with_mask()) {
        let t = ChimeraTopology::new(rows, cols, &mask).unwrap();
        let (intra, inter) = oracle_counts(rows, cols, &mask);
        prop_assert_eq!(t.count_couplers(CouplerKind::Intra), intra);
        prop_assert_eq!(t.count_couplers(CouplerKind::Inter), inter);
    }

    #[test]
    fn neighbors_symmetric((rows, cols, mask) in grid_with_mask()) {
        let t = ChimeraTopology::new(rows, cols, &mask).unwrap();
        for i in t.active_qubits() {
            for j in t.neighbors(i).unwrap() {
                prop_assert!(t.neighbors(j).unwrap().contains(&i));
            }
        }
    }

    #[test]
    fn couplers_ordered_and_unique((rows, cols, mask) in grid_with_mask()) {
        let t = ChimeraTopology::new(rows, cols, &mask).unwrap();
        let mut seen = std::collections::HashSet::new();
        for c in t.couplers() {
            prop_assert!(c.a < c.b);
            prop_assert!(seen.insert((c.a, c.b)));
            prop_assert!(t.is_active(c.a) && t.is_active(c.b));
        }
    }

    #[test]
    fn cells_are_complete_bipartite(rows in 1usize..5, cols in 1usize..5) {
        let t = ChimeraTopology::new(rows, cols, &[]).unwrap();
        for cell in 0..rows * cols {
            let base = cell * 8;
            let mut edges = 0;
            for i in base..base + 8 {
                for j in i + 1..base + 8 {
                    let same_side = (i - base < 4) == (j - base < 4);
                    let linked = t.coupler_between(i, j).is_some();
                    prop_assert_eq!(linked, !same_side);
                    edges += usize::from(linked);
                }
            }
            prop_assert_eq!(edges, 16);
        }
    }

    #[test]
    fn index_round_trip(rows in 1usize..6, cols in 1usize..6, pick in 0usize..10_000) {
        let t = ChimeraTopology::new(rows, cols, &[]).unwrap();
        let q = pick % t.num_qubits();
        let c = t.coord(q).unwrap();
        prop_assert!(c.offset < 4 && c.row < rows && c.col < cols);
        prop_assert_eq!(t.index(c).unwrap(), q);
    }
}
