use proptest::prelude::*;

use stefan_relax::analysis::{hat, hat_with, HatRule};
use stefan_relax::graphs::{Breakpoint, MonotoneGraph, PsiPreset};
use stefan_relax::mesh::{assemble, build_mesh, BoundaryCondition};
use stefan_relax::problem::{ProblemData, TimeField};
use stefan_relax::relaxed::{energy_residual, solve_relaxed_with, RelaxedConfig};
use stefan_relax::stefan::{enthalpy_decompose, solve_stefan_with, StefanConfig};

/// Random bounded monotone graph: sorted abscissae, nondecreasing ordinates,
/// some breakpoints with a vertical segment.
fn graph_strategy() -> impl Strategy<Value = MonotoneGraph> {
    prop::collection::vec((-3.0..3.0f64, 0.0..1.0f64, 0.0..0.8f64), 1..6).prop_map(|raw| {
        let mut rs: Vec<f64> = raw.iter().map(|t| t.0).collect();
        rs.sort_by(f64::total_cmp);
        rs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut level = -2.0;
        let bps = rs
            .iter()
            .zip(&raw)
            .map(|(&r, &(_, rise, jump))| {
                let lo = level + 0.5 * rise;
                let hi = lo + jump;
                level = hi;
                Breakpoint::new(r, lo, hi)
            })
            .collect();
        MonotoneGraph::new(bps).unwrap()
    })
}

fn preset_strategy() -> impl Strategy<Value = PsiPreset> {
    prop::sample::select(PsiPreset::ALL.to_vec())
}

fn bc_strategy() -> impl Strategy<Value = BoundaryCondition> {
    prop::sample::select(vec![BoundaryCondition::Dirichlet, BoundaryCondition::Neumann])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn resolvent_is_consistent_and_nonexpansive(
        g in graph_strategy(),
        lambda in 0.01..20.0f64,
        e1 in -10.0..10.0f64,
        e2 in -10.0..10.0f64,
    ) {
        let w1 = g.resolvent(lambda, e1).unwrap();
        let w2 = g.resolvent(lambda, e2).unwrap();
        prop_assert!((w1 - w2).abs() <= (e1 - e2).abs() * (1.0 + 1e-12) + 1e-14);
        let img = g.eval(w1).unwrap();
        prop_assert!(img.distance((e1 - w1) / lambda) <= 1e-12 * (1.0 + e1.abs()) / lambda);
    }

    #[test]
    fn graph_is_ordered(g in graph_strategy(), r1 in -5.0..5.0f64, r2 in -5.0..5.0f64) {
        let (a, b) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        prop_assume!(a < b);
        prop_assert!(g.eval(a).unwrap().hi <= g.eval(b).unwrap().lo + 1e-12);
    }

    #[test]
    fn enthalpy_split_is_monotone_and_lipschitz(
        g in graph_strategy(),
        u in -2.0..2.0f64,
        e1 in -6.0..6.0f64,
        e2 in -6.0..6.0f64,
    ) {
        let (t1, c1) = enthalpy_decompose(e1, u, &g).unwrap();
        let (t2, _) = enthalpy_decompose(e2, u, &g).unwrap();
        prop_assert!((t1 - t2) * (e1 - e2) >= -1e-14);
        prop_assert!((t1 - t2).abs() <= (e1 - e2).abs() + 1e-12);
        prop_assert!((t1 + c1 - e1).abs() <= 1e-12 * (1.0 + e1.abs()));
        prop_assert!(g.eval_near(t1 + u, 1e-12).unwrap().contains(c1, 1e-10));
    }

    #[test]
    fn hat_is_linear(
        v in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 1..12),
        w in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 12),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        dt in 1e-3..1.0f64,
    ) {
        let w = &w[..v.len()];
        let combo: Vec<Vec<f64>> = v.iter().zip(w).map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()).collect();
        for rule in [HatRule::Left, HatRule::Right] {
            let (hv, hw, hc) = (hat_with(&v, dt, rule), hat_with(w, dt, rule), hat_with(&combo, dt, rule));
            for n in 0..v.len() {
                for i in 0..3 {
                    let lin = a * hv[n][i] + b * hw[n][i];
                    prop_assert!((hc[n][i] - lin).abs() <= 1e-12 * (1.0 + lin.abs() + hc[n][i].abs()) * (n + 1) as f64);
                }
            }
        }
    }

    #[test]
    fn stiffness_is_symmetric_positive(
        n in 3usize..30,
        left in bc_strategy(),
        right in bc_strategy(),
        v in prop::collection::vec(-1.0..1.0f64, 30),
        w in prop::collection::vec(-1.0..1.0f64, 30),
    ) {
        let mesh = build_mesh(0.0, 2.0, n, left, right).unwrap();
        let ops = assemble(&mesh);
        let k = &ops.stiffness_free;
        let (v, w) = (&v[..n], &w[..n]);
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        let (kv, kw) = (k.mul_vec(v), k.mul_vec(w));
        prop_assert!((dot(w, &kv) - dot(v, &kw)).abs() < 1e-10);
        prop_assert!(dot(v, &kv) >= -1e-12);
        prop_assert!((ops.mass.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn neumann_heat_step_conserves_mass(
        n in 2usize..40,
        theta0 in prop::collection::vec(-2.0..2.0f64, 40),
        dt in 1e-4..1.0f64,
    ) {
        let mesh = build_mesh(0.0, 1.0, n, BoundaryCondition::Neumann, BoundaryCondition::Neumann).unwrap();
        let ops = assemble(&mesh);
        let data = ProblemData {
            f: TimeField::zeros(n),
            u: TimeField::zeros(n),
            theta0: theta0[..n].to_vec(),
            chi0: vec![0.0; n],
            t_final: dt,
            n_steps: 1,
            psi: PsiPreset::Zero.build(),
        };
        let traj = solve_stefan_with(&ops, &data, &StefanConfig::default()).unwrap();
        let total = |v: &[f64]| ops.mass.iter().zip(v).map(|(m, x)| m * x).sum::<f64>();
        prop_assert!((total(&traj.theta[1]) - total(&traj.theta[0])).abs() < 1e-12);
    }

    #[test]
    fn relaxed_runs_obey_the_maximum_principle(
        preset in preset_strategy(),
        n in 3usize..20,
        theta0 in prop::collection::vec(-1.0..1.0f64, 20),
        chi0 in prop::collection::vec(-1.0..1.0f64, 20),
        f in prop::collection::vec(-5.0..5.0f64, 20),
        eps in 0.05..1.0f64,
        left in bc_strategy(),
    ) {
        let mesh = build_mesh(0.0, 1.0, n, left, BoundaryCondition::Neumann).unwrap();
        let ops = assemble(&mesh);
        let mut theta0 = theta0[..n].to_vec();
        if mesh.is_dirichlet(0) {
            theta0[0] = 0.0;
        }
        let psi = preset.build();
        let m = psi.graph().bound();
        let chi0: Vec<f64> = chi0[..n].iter().map(|c| c * m).collect();
        let data = ProblemData {
            f: TimeField::Stationary(f[..n].to_vec()),
            u: TimeField::zeros(n),
            theta0,
            chi0,
            t_final: 0.2,
            n_steps: 40,
            psi,
        };
        let cfg = RelaxedConfig::new(eps).unwrap();
        let traj = solve_relaxed_with(&ops, &data, &cfg).unwrap();
        prop_assert!(traj.max_abs_chi() <= m + 10.0 * cfg.inner_tol, "{}", traj.max_abs_chi());
        for k in 0..data.n_steps {
            let r = energy_residual(&ops, &traj.theta[k], &traj.chi[k], &traj.theta[k + 1], &traj.chi[k + 1], data.f.at(k + 1), traj.dt);
            prop_assert!(r < 10.0 * cfg.inner_tol);
        }
    }

    #[test]
    fn stefan_scheme_is_order_preserving(
        n in 3usize..25,
        e0 in prop::collection::vec(-2.0..2.0f64, 25),
        f in prop::collection::vec(-3.0..3.0f64, 25),
        extra in prop::collection::vec(0.0..3.0f64, 25),
        left in bc_strategy(),
    ) {
        let mesh = build_mesh(0.0, 1.0, n, left, BoundaryCondition::Neumann).unwrap();
        let ops = assemble(&mesh);
        let graph = PsiPreset::Sign.build();
        let mut theta0 = vec![0.0; n];
        let mut chi0 = vec![0.0; n];
        for i in 0..n {
            let (t, c) = enthalpy_decompose(e0[i], 0.0, graph.graph()).unwrap();
            if mesh.is_dirichlet(i) {
                chi0[i] = c.clamp(-1.0, 1.0);
            } else {
                theta0[i] = t;
                chi0[i] = c;
            }
        }
        let base = ProblemData {
            f: TimeField::Stationary(f[..n].to_vec()),
            u: TimeField::zeros(n),
            theta0,
            chi0,
            t_final: 0.1,
            n_steps: 10,
            psi: graph,
        };
        let mut hot = base.clone();
        hot.f = TimeField::Stationary(f[..n].iter().zip(&extra).map(|(a, b)| a + b).collect());
        let cfg = StefanConfig::default();
        let cold = solve_stefan_with(&ops, &base, &cfg).unwrap();
        let again = solve_stefan_with(&ops, &base, &cfg).unwrap();
        prop_assert_eq!(&cold, &again);
        let warm = solve_stefan_with(&ops, &hot, &cfg).unwrap();
        for k in 0..=base.n_steps {
            for (a, b) in cold.enthalpy(k).iter().zip(warm.enthalpy(k)) {
                prop_assert!(b >= a - 1e-9);
            }
        }
    }
}

#[test]
fn l2q_of_constant_trajectory() {
    let mesh = build_mesh(0.0, 1.0, 5, BoundaryCondition::Neumann, BoundaryCondition::Dirichlet).unwrap();
    let ops = assemble(&mesh);
    let v = vec![0.3, -1.0, 2.0, 0.5, 0.0];
    let dt = 0.125;
    let fields = vec![v.clone(); 9];
    let t = 8.0 * dt;
    let norms = ops.trajectory_norms(&fields, dt).unwrap();
    assert!((norms.l2_q - t.sqrt() * ops.l2(&v).unwrap()).abs() < 1e-14);
    let h = hat(&fields, dt);
    assert!((h[8][2] - 2.0 * t).abs() < 1e-14);
}
