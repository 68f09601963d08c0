// Conditions survive composing with a linear isomorphism on the right, but
// not on the left.

use std::path::Path;

use globinj::conditions::{check_integral, check_palais_smale, check_rabier, CheckConfig, Status};
use globinj::expr::{parse_map, ExprMap};
use globinj::numlin::{self, Matrix};
use globinj::scan::{mix64, RadiusSchedule};

fn fixture(name: &str) -> ExprMap {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    parse_map(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn config(r_max: f64) -> CheckConfig {
    CheckConfig { schedule: RadiusSchedule { r_min: 1.0, r_max, points_per_decade: 12 }, ..Default::default() }
}

/// Composing mixes the thin valleys of King and PZ into every coordinate, and
/// f64 cancellation loses them a decade or so earlier than in the original
/// coordinates. The schedules stop short of that, and the decay tolerances
/// are loosened so a shift of the tail by the scale of `A` cannot move it
/// across a threshold.
fn shortened(r_max: f64) -> CheckConfig {
    let mut c = config(r_max);
    c.thresholds.tol_ps = 1e-2;
    c.thresholds.tol_rabier = 1e-2;
    c
}

/// Seeded random matrices with condition number at most 10, scaled so the
/// singular values straddle 1.
fn well_conditioned(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut s = seed;
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        s = mix64(s);
                        (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
                    })
                    .collect()
            })
            .collect();
        let sv = numlin::singular_values(&Matrix::from_rows(&rows)).unwrap();
        if sv[n - 1] > 0.0 && sv[0] / sv[n - 1] <= 10.0 {
            let mid = (sv[0] * sv[n - 1]).sqrt();
            return rows.into_iter().map(|r| r.into_iter().map(|v| v / mid).collect()).collect();
        }
    }
}

fn agree(g: &ExprMap, name: &str, cfg: &CheckConfig, seeds: &[u64]) {
    let base = [
        check_palais_smale(g, name, cfg).unwrap().verdict,
        check_rabier(g, name, cfg).unwrap().verdict,
    ];
    for &seed in seeds {
        let a = well_conditioned(g.n_in(), seed);
        let ga = g.compose_linear_right(&a).unwrap();
        let reps = [check_palais_smale(&ga, name, cfg).unwrap(), check_rabier(&ga, name, cfg).unwrap()];
        let got = [reps[0].verdict, reps[1].verdict];
        assert_eq!(got, base, "{name} composed with {a:?}: {} / {}", reps[0].rationale, reps[1].rationale);
    }
}

#[test]
fn king_right_composition() {
    let g = fixture("king_h.map");
    let cfg = shortened(1e4);
    assert_eq!(check_rabier(&g, "h", &cfg).unwrap().verdict, Status::Fails);
    agree(&g, "king", &cfg, &[1, 2, 3]);
}

#[test]
fn pz_right_composition() {
    let g = fixture("pz.map");
    let cfg = shortened(1e3);
    assert_eq!(check_palais_smale(&g, "pz", &cfg).unwrap().verdict, Status::Fails);
    agree(&g, "pz", &cfg, &[4, 5]);
}

#[test]
fn quadratic_triangular_right_composition() {
    let f = fixture("quadratic_triangular.map");
    let cfg = config(1e4);
    for i in 0..3 {
        let g = f.select(&[i]).unwrap();
        assert_eq!(check_palais_smale(&g, "f", &cfg).unwrap().verdict, Status::Holds);
        agree(&g, &format!("f{}", i + 1), &cfg, &[6, 7]);
    }
}

#[test]
fn left_composition_changes_the_cone_verdicts() {
    let f = fixture("cone.map");
    let cfg = config(1e6);
    let f3 = f.select(&[2]).unwrap();
    assert_ne!(check_integral(&f3, "f3", &cfg).unwrap().verdict, Status::Holds);
    assert_ne!(check_rabier(&f3, "f3", &cfg).unwrap().verdict, Status::Holds);

    let a = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, -0.5]];
    let g = f.compose_linear_left(&a).unwrap();
    for i in 0..3 {
        let gi = g.select(&[i]).unwrap();
        let name = format!("g{}", i + 1);
        let ps = check_palais_smale(&gi, &name, &cfg).unwrap();
        assert_eq!(ps.verdict, Status::Holds, "{name}: {}", ps.rationale);
        assert_eq!(check_integral(&gi, &name, &cfg).unwrap().verdict, Status::Holds, "{name}");
        let floor = ps.scan_data[0].valid().map(|(_, v)| v).fold(f64::INFINITY, f64::min);
        assert!(floor >= 0.5 - 1e-6, "{name}: m(r) down to {floor}");
    }
}

