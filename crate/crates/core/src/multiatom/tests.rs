use super::*;
use crate::ensemble::{linspace, nn_cdf};
use crate::pair::{channel_coupling, AtomPair};
use crate::twolevel::{qpm_sequence, transfer_probability};

fn rho(x: f64) -> Density {
    Density::per_cm3(x).unwrap()
}

fn sample_group() -> FourAtomGroup {
    FourAtomGroup::new(
        vec![
            [0.0, 0.0, 0.0],
            [3.1, 0.4, -1.2],
            [-2.0, 2.5, 1.0],
            [0.7, -1.9, 3.3],
        ],
        vec![true, false, false, true],
    )
    .unwrap()
}

#[test]
fn hamiltonian_is_hermitian_with_all_p_at_zero() {
    let g = sample_group();
    let basis = GroupBasis::enumerate(4);
    for e in [0.0, 15.0, -7.5] {
        let h = build_hamiltonian(&g, &basis, e, Couplings::ALL).unwrap();
        assert!(hermiticity_error(&h) < 1e-12);
        assert_eq!(h[(0, 0)], C64::new(0.0, 0.0));
    }
    let h0 = build_hamiltonian(&g, &basis, 0.0, Couplings::ALL).unwrap();
    assert_eq!(h0.trace(), C64::new(0.0, 0.0));
}

#[test]
fn flipping_detuning_negates_only_the_diagonal() {
    let g = sample_group();
    let basis = GroupBasis::enumerate(4);
    let a = build_hamiltonian(&g, &basis, 12.0, Couplings::ALL).unwrap();
    let b = build_hamiltonian(&g, &basis, -12.0, Couplings::ALL).unwrap();
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            if i == j {
                assert_eq!(a[(i, i)], -b[(i, i)]);
            } else {
                assert_eq!(a[(i, j)], b[(i, j)]);
            }
        }
    }
}

#[test]
fn collinear_stretched_pair_has_no_resonant_element_but_exchanges() {
    // both atoms +: resonant ++ channel vanishes on the axis, exchange uses
    // the ΔM = 0 form, which is -2/3 there
    let g = FourAtomGroup::new(
        vec![[0.0; 3], [0.0, 0.0, 4.0], [50.0, 0.0, 0.0]],
        vec![true, true, false],
    )
    .unwrap();
    let basis = GroupBasis::enumerate(3);
    let h = build_hamiltonian(&g, &basis, 0.0, Couplings::ALL).unwrap();
    use Level::*;
    let i = basis.index_of(&[P, P, P]).unwrap();
    let j = basis.index_of(&[S, SPrime, P]).unwrap();
    assert_eq!(h[(i, j)].norm(), 0.0);
    let k = PhysicalConstants::RB_32P;
    let a = basis.index_of(&[P, S, SPrime]).unwrap();
    let b = basis.index_of(&[S, P, SPrime]).unwrap();
    let expected = 0.5 * k.radial_prefactor(k.r_ps * k.r_ps, 4.0).unwrap() * (-2.0 / 3.0);
    assert!((h[(a, b)] - C64::new(expected, 0.0)).norm() < 1e-12);
}

#[test]
fn two_atom_group_couples_pp_only_to_the_symmetric_combination() {
    let g = FourAtomGroup::new(vec![[0.0; 3], [1.0, 2.0, 2.5]], vec![true, false]).unwrap();
    let basis = GroupBasis::enumerate(2);
    let h = build_hamiltonian(&g, &basis, 3.0, Couplings::ALL).unwrap();
    use Level::*;
    let pp = basis.index_of(&[P, P]).unwrap();
    let a = basis.index_of(&[S, SPrime]).unwrap();
    let b = basis.index_of(&[SPrime, S]).unwrap();
    let sym = (h[(pp, a)] + h[(pp, b)]) / 2f64.sqrt();
    let anti = (h[(pp, a)] - h[(pp, b)]) / 2f64.sqrt();
    assert_eq!(anti.norm(), 0.0);
    let pair = AtomPair::from_vector([1.0, 2.0, 2.5], Channel::PlusMinus).unwrap();
    assert!((sym - channel_coupling(&pair).unwrap()).norm() < 1e-12);
}

#[test]
fn two_atom_group_reproduces_the_two_level_transfer() {
    let d = [2.0, -1.5, 3.0];
    for (sa, sb, ch) in [
        (true, true, Channel::PlusPlus),
        (false, true, Channel::MinusPlus),
    ] {
        let g = FourAtomGroup::new(vec![[0.0; 3], d], vec![sa, sb]).unwrap();
        let v = channel_coupling(&AtomPair::from_vector(d, ch).unwrap()).unwrap();
        let seq = PulseSequence::constant(6.0, 1.0).unwrap();
        let times = linspace(0.0, 1.0, 51).unwrap();
        let ev = propagate_group(&g, &seq, &times, Couplings::RESONANT_ONLY).unwrap();
        for (t, p) in times.iter().zip(&ev.p) {
            let expected = 1.0 - transfer_probability(6.0, v, *t).unwrap();
            assert!((p - expected).abs() < 1e-10, "t={t}: {p} vs {expected}");
        }
        assert_eq!(ev.p[0], 1.0);
    }
}

#[test]
fn distant_pairs_evolve_independently_without_exchange() {
    let (d1, d2) = ([2.0, 1.0, 2.5], [-1.0, 3.0, 0.5]);
    let far = 2000.0;
    let g = FourAtomGroup::new(
        vec![[0.0; 3], d1, [far, 0.0, 0.0], [far + d2[0], d2[1], d2[2]]],
        vec![true, false, true, true],
    )
    .unwrap();
    let v1 = channel_coupling(&AtomPair::from_vector(d1, Channel::PlusMinus).unwrap()).unwrap();
    let v2 = channel_coupling(&AtomPair::from_vector(d2, Channel::PlusPlus).unwrap()).unwrap();
    let seq = qpm_sequence(5.0, 1.2, 4).unwrap();
    let times = linspace(0.0, 1.2, 37).unwrap();
    let ev = propagate_group(&g, &seq, &times, Couplings::RESONANT_ONLY).unwrap();
    for (i, &t) in times.iter().enumerate() {
        let s = seq.truncated(t).unwrap();
        let p1 = crate::twolevel::evolve_from_pp(&s, v1)[0].norm_sqr();
        let p2 = crate::twolevel::evolve_from_pp(&s, v2)[0].norm_sqr();
        assert!((ev.p[i] - 0.5 * (p1 + p2)).abs() < 1e-6);
    }
}

#[test]
fn populations_are_invariant_under_relabelling() {
    let g = sample_group();
    let seq = qpm_sequence(8.0, 0.8, 2).unwrap();
    let times = linspace(0.0, 0.8, 17).unwrap();
    let base = propagate_group(&g, &seq, &times, Couplings::ALL).unwrap();
    for perm in [[1, 0, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1]] {
        let other =
            propagate_group(&g.permuted(&perm).unwrap(), &seq, &times, Couplings::ALL).unwrap();
        for k in 0..times.len() {
            assert!((base.p[k] - other.p[k]).abs() < 1e-10);
            assert!((base.s[k] - other.s[k]).abs() < 1e-10);
        }
    }
}

#[test]
fn norm_and_selection_rule_hold() {
    let g = sample_group();
    let basis = GroupBasis::enumerate(4);
    let seqs: Vec<PulseSequence> = (1..=20)
        .map(|k| qpm_sequence(10.0, 0.05 * k as f64, 4).unwrap())
        .collect();
    let ev = propagate_sequences(&g, &basis, &seqs, Couplings::ALL).unwrap();
    assert!(ev.max_norm_error < 1e-10);
    for amps in &ev.amplitudes {
        for (a, s) in amps.iter().zip(basis.states()) {
            if a.norm_sqr() > 0.0 {
                assert_eq!(count(s, Level::S), count(s, Level::SPrime));
            }
        }
    }
    for k in 0..seqs.len() {
        assert!((ev.p[k] + ev.s[k] + ev.s_prime[k] - 1.0).abs() < 1e-10);
    }
}

#[test]
fn built_groups_follow_the_recipe() {
    let d = rho(1e9);
    let edge = cube_edge(d);
    assert!((edge - 46.4159).abs() < 1e-3);
    for i in 0..200 {
        let g = build_group(d, &mut substream(3, i));
        assert_eq!(g.len(), 4);
        assert_eq!(g.positions()[0], [0.5 * edge; 3]);
        assert!(g
            .positions()
            .iter()
            .flatten()
            .all(|&x| (0.0..=edge).contains(&x)));
        let dist: Vec<f64> = g
            .pair_geometry()
            .iter()
            .filter(|p| p.a == 0)
            .map(|p| p.separation)
            .collect();
        assert!(dist.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn nearest_neighbour_distance_of_groups() {
    let d = rho(1e9);
    let n = 20_000;
    let mut r: Vec<f64> = (0..n)
        .map(|i| build_group(d, &mut substream(17, i as u64)).pair_geometry()[0].separation)
        .collect();
    r.sort_by(f64::total_cmp);
    let ks = r
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = nn_cdf(d, x);
            (f - i as f64 / n as f64)
                .abs()
                .max(((i + 1) as f64 / n as f64 - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.015, "KS {ks}");
}

#[test]
fn single_group_ensemble_is_that_group() {
    let cfg = GroupConfig::new(rho(1e9), 1, 5);
    let seq = qpm_sequence(15.0, 0.4, 2).unwrap();
    let times = linspace(0.0, 0.4, 21).unwrap();
    let rec = ensemble_average_groups(&cfg, &seq, &times).unwrap();
    let ev = propagate_group(&cfg.group(0).unwrap(), &seq, &times, Couplings::ALL).unwrap();
    assert_eq!(rec.p_population, ev.p);
    assert_eq!(rec.p_population[0], 1.0);
}

#[test]
fn group_validation() {
    assert!(FourAtomGroup::new(vec![[0.0; 3]], vec![true]).is_err());
    assert!(FourAtomGroup::new(vec![[0.0; 3], [0.0; 3]], vec![true, true]).is_err());
    assert!(FourAtomGroup::new(vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![true]).is_err());
    assert!(sample_group().permuted(&[0, 0, 1, 2]).is_err());
    let mut cfg = GroupConfig::new(rho(1e9), 10, 1);
    cfg.atoms = 5;
    assert!(cfg.validate().is_err());
}

#[test]
fn four_atom_groups_depart_from_the_pair_model_at_late_times() {
    use crate::ensemble::{ensemble_evolution, EnsembleConfig};
    let seq = PulseSequence::constant(15.0, 0.4).unwrap();
    let times = linspace(0.2, 0.4, 11).unwrap();
    let groups =
        ensemble_average_groups(&GroupConfig::new(rho(1e9), 5000, 3), &seq, &times).unwrap();
    let pairs =
        ensemble_evolution(&EnsembleConfig::new(rho(1e9), 20_000, 4), &seq, &times).unwrap();
    let worst = (0..times.len())
        .map(|i| {
            let se = groups.p_stderr[i].hypot(pairs.p_stderr[i]);
            (groups.p_population[i] - pairs.p_population[i]).abs() / se
        })
        .fold(0.0, f64::max);
    assert!(worst > 3.0, "4-atom vs 2-atom deviation only {worst:.2}σ");
}
