use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qcoin::automaton::{ClassicalCoinAutomaton, Verdict, VerdictKind, VerdictThresholds, VERDICT_SLACK};
use qcoin::experiments::{sweep, Grid};
use qcoin::fixed_points::support;
use qcoin::linalg::{is_contained, max_abs, singular_values, unvectorize, vectorize};
use qcoin::random::{random_channel, random_density, random_quantum_automaton, random_unitary, structured_channel, BlockLayout};
use qcoin::{cesaro_finite, cesaro_limit, fix_space, invariant_state_basis, recurrent_and_decaying, Tolerances};

#[test]
fn projector_rank_equals_fix_dim() {
    let tols = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..15 {
        let layout = BlockLayout::random(5, &mut rng);
        let frame = random_unitary(layout.dim(), &mut rng);
        let ch = structured_channel(&layout, &frame, 2, &mut rng);
        let p = cesaro_limit(&ch, &tols).unwrap();
        let rank = singular_values(p.matrix()).unwrap().iter().filter(|&&s| s > 1e-6).count();
        assert_eq!(rank, fix_space(&ch, tols.rank).unwrap().dim());
    }
}

#[test]
fn finite_averages_approach_the_limit_state() {
    let tols = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..10 {
        let dim = rng.random_range(2..=4);
        let ch = random_channel(dim, rng.random_range(1..=3), &mut rng);
        let rho0 = random_density(dim, &mut rng);
        let limit = cesaro_limit(&ch, &tols).unwrap();
        let target = unvectorize(&(limit.matrix() * vectorize(rho0.matrix())), dim).unwrap();
        let errors: Vec<f64> = [100, 1000, 10_000]
            .iter()
            .map(|&t| max_abs(&(cesaro_finite(&ch, &rho0, t).unwrap().matrix() - &target)))
            .collect();
        assert!(
            errors[0] <= 1e-12 || (errors[1] < errors[0] && errors[2] < errors[1]),
            "{errors:?}"
        );
    }
}

#[test]
fn invariant_state_supports_lie_in_recurrent_part() {
    let tols = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..15 {
        let layout = BlockLayout::random(6, &mut rng);
        let frame = random_unitary(layout.dim(), &mut rng);
        let ch = structured_channel(&layout, &frame, 2, &mut rng);
        let (recurrent, _) = recurrent_and_decaying(&ch, &tols).unwrap();
        for s in invariant_state_basis(&ch, &tols).unwrap() {
            let supp = support(s.matrix(), tols.support).unwrap();
            assert!(is_contained(&supp, &recurrent, 1e-7).unwrap());
        }
    }
}

fn probe_automata() -> Vec<qcoin::automaton::QuantumCoinAutomaton> {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut out: Vec<_> = (0..8).map(|i| random_quantum_automaton(2 + i % 2, i, &mut rng)).collect();
    out.push(ClassicalCoinAutomaton::absorbing_example().to_quantum().unwrap());
    out
}

#[test]
fn refining_the_grid_shrinks_jumps() {
    let tols = Tolerances::default();
    let coarse = Grid::new(0.02, 0.98, 49).unwrap();
    let fine = Grid::new(0.02, 0.98, 193).unwrap();
    for (i, a) in probe_automata().iter().enumerate() {
        let j_coarse = sweep(a, &coarse, &tols).unwrap().max_adjacent_jump;
        let j_fine = sweep(a, &fine, &tols).unwrap().max_adjacent_jump;
        assert!(
            2.0 * j_fine <= j_coarse || j_coarse < 1e-12,
            "automaton {i}: {j_coarse} vs {j_fine}"
        );
    }
}

#[test]
fn verdicts_only_flip_across_large_gaps() {
    let tols = Tolerances::default();
    let thresholds = VerdictThresholds::default();
    let grid = Grid::new(0.02, 0.98, 49).unwrap();
    for a in probe_automata() {
        let r = sweep(&a, &grid, &tols).unwrap();
        let kinds: Vec<VerdictKind> = r
            .f_values
            .iter()
            .map(|&f| Verdict::from_value(f, &thresholds).kind)
            .collect();
        for k in 1..kinds.len() {
            let flip = matches!(
                (kinds[k - 1], kinds[k]),
                (VerdictKind::Fair, VerdictKind::Biased) | (VerdictKind::Biased, VerdictKind::Fair)
            );
            if flip {
                let gap = (r.f_values[k] - r.f_values[k - 1]).abs();
                assert!(gap >= 1.0 / 3.0 - 2.0 * VERDICT_SLACK, "gap {gap} at p = {}", r.p_grid[k]);
            }
        }
    }
}
