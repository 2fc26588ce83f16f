//! Acceptance criteria 1-9. Each test prints one `criterion N: PASS|FAIL`
//! line before asserting.

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use pluripot_core::blowup::{build_blowup, check_compact_bound, decade_offsets, verify_blowup, CoefficientRule, InnerDomain};
use pluripot_core::cross::{
    a_point_violations, build_domain_prop_c, check_fiber_identity, conservative_mask, envelope_mask, first_full_cell,
    omega_for_region, RegionOmega,
};
use pluripot_core::extremal::{
    certified_cell_mask, certified_point_mask, classify_dichotomy, disc_oracle, line_sweep_envelope, product_envelope,
    solve_h, solve_omega, witness_lower_bound_with_max, Dichotomy, ObstacleProblem, SolverConfig, DEFAULT_DELTA_CLASSIFY,
};
use pluripot_core::grid::{read_grid_function, write_grid_function};
use pluripot_core::series::{
    build_s_prop_b, build_s_prop_c, plurithin_certificate, Ball, CertificationConfig, VTable,
};
use pluripot_core::topology::{
    build_path, check_separation, connected_components, cube_suite, free_mask, resolvable_cube, verify_path, Cube, PathConfig,
};
use pluripot_core::*;

const TERMS: usize = 2000;
const ORACLE_RESOLUTION: usize = 257;
const ORACLE_TOLERANCE: f64 = 0.02;
const ORACLE_TIME: Duration = Duration::from_secs(30);
const DICHOTOMY_LEVELS: usize = 4;
const SUP_ONE_FLOOR: f64 = 0.95;
const SEPARATION_RESOLUTIONS: [usize; 2] = [65, 129];
const SUITE_HALF_SIDE: f64 = 0.25;
const PATH_PAIRS: usize = 20;
const PATH_RESOLUTION: usize = 65;
const WITNESS_FLOOR: f64 = 0.01;
const REVERIFY_SLACK: f64 = 1e-12;
const OMEGA_ZERO_FLOOR: f64 = 0.01;
const S_CELL_RESOLUTION: usize = 13;
const PRODUCT_RESOLUTION: usize = 65;
const SWEEP_TOLERANCE: f64 = 1e-8;
const SWEEP_MAX: usize = 200;
const LINE_SWEEP_SLACK: f64 = 1e-12;
const WITNESS_SWEEP_SLACK: f64 = 0.02;
const BLOWUP_POLES: usize = 10;
const BLOWUP_THRESHOLD: f64 = 1e3;
const BLOWUP_DECADES: u32 = 6;
const COMPACT_DELTA: f64 = 0.1;

fn series() -> &'static TruncatedLogSeries {
    static S: OnceLock<TruncatedLogSeries> = OnceLock::new();
    S.get_or_init(|| TruncatedLogSeries::standard(TERMS).unwrap())
}

fn c(re: f64, im: f64) -> ComplexPoint {
    ComplexPoint::new(re, im)
}

/// Written straight to stderr so the line survives output capture.
fn report(n: usize, ok: bool, detail: String) {
    let line = format!("criterion {n}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn cell_rho(g: &Grid) -> f64 {
    let h = g.spacing();
    (0..g.complex_dim()).map(|j| 0.5 * h[2 * j].hypot(h[2 * j + 1])).fold(0.0, f64::max)
}

/// `ω_ℬ` on the unit disc at `res`.
fn omega_b(res: usize) -> RegionOmega {
    let g = make_grid(Polydisc::unit(1), res).unwrap();
    let table = VTable::for_grid(series(), &g, Some(cell_rho(&g))).unwrap();
    omega_for_region(&RegionSpec::b(), &g, SolverConfig::default(), &table).unwrap()
}

fn omega_b_257() -> &'static RegionOmega {
    static W: OnceLock<RegionOmega> = OnceLock::new();
    W.get_or_init(|| omega_b(ORACLE_RESOLUTION))
}

/// `1 / (2M + 1)` for `𝒜_2` on the slice `{(z, 0)}` with `M = 2 max v`.
fn a2_witness(res: usize) -> f64 {
    let g = make_grid(Polydisc::unit(1), res).unwrap();
    let v = series().v_grid(&g).unwrap();
    let vmax = v.max_on_domain().unwrap().1;
    let a_mask = certified_point_mask(&RegionSpec::a_n(1), &g, series());
    let cert = witness_lower_bound_with_max(&v, &a_mask, 2.0 * vmax).unwrap();
    cert.value_at_zero
}

#[test]
fn criterion_1_disc_oracle() {
    let g = make_grid(Polydisc::unit(1), ORACLE_RESOLUTION).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for r in [0.1, 0.25, 0.5] {
        let t = Instant::now();
        let p = ObstacleProblem::disc_in_disc(&g, c(0.0, 0.0), r, SolverConfig::default()).unwrap();
        let s = solve_h(&p).unwrap();
        let elapsed = t.elapsed();
        let err = s.values.masked().map(|(n, v)| (v - disc_oracle(g.coords(n)[0], r)).abs()).fold(0.0, f64::max);
        ok &= s.converged && err <= ORACLE_TOLERANCE && elapsed < ORACLE_TIME;
        detail += &format!("r={r}: err={err:.3e} time={elapsed:.2?}; ");
    }
    report(1, ok, detail);
    assert!(ok);
}

#[test]
fn criterion_2_dichotomy() {
    let g = make_grid(Polydisc::unit(1), ORACLE_RESOLUTION).unwrap();
    let cfg = SolverConfig::default();
    let cases = [
        ("A = Omega", g.domain_mask(), Dichotomy::IdenticallyZero),
        ("disc r=0.25", g.mask_where(|z| z[0].norm() <= 0.25), Dichotomy::SupOne),
        ("B", omega_b_257().contact.clone(), Dichotomy::SupOne),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (name, mask, expected) in cases {
        let p = ObstacleProblem::new(&g, &mask, cfg).unwrap();
        let o = solve_omega(&p, DICHOTOMY_LEVELS).unwrap();
        match classify_dichotomy(&o, DEFAULT_DELTA_CLASSIFY) {
            Ok(d) => {
                let pass = d.verdict == expected && (expected == Dichotomy::IdenticallyZero || d.sup >= SUP_ONE_FLOOR);
                ok &= pass;
                detail += &format!("{name}: {:?} sup={:.6}; ", d.verdict, d.sup);
            }
            Err(e) => {
                ok = false;
                detail += &format!("{name}: {e}; ");
            }
        }
    }
    report(2, ok, detail);
    assert!(ok);
}

#[test]
fn criterion_3_prop_a() {
    let s = series();
    let z = [c(0.0, 0.0), c(0.0, 0.0)];
    let a2 = RegionSpec::a_n(2);
    let cert = plurithin_certificate(&z, &a2, s, 0.1, 9).unwrap();
    let mut ok = cert.value == 0.0 && cert.value_exact && cert.sup_bound <= -1.0 && cert.passes;
    let mut detail = format!("u(0)={} sup={:.4}; ", cert.value, cert.sup_bound);
    let obstruction = RegionSpec::complement(a2);
    let (suite, excluded): (Vec<Cube>, Vec<Cube>) =
        cube_suite(2, SUITE_HALF_SIDE).into_iter().partition(|c| resolvable_cube(c, s, SEPARATION_RESOLUTIONS[0]));
    for cube in &suite {
        for res in SEPARATION_RESOLUTIONS {
            let table = VTable::for_grid(s, &cube.lattice(res).unwrap(), None).unwrap();
            let r = check_separation(cube, &Polydisc::unit(2), &obstruction, &[res], &table).unwrap();
            ok &= r.non_separating;
            detail += &format!("{}:{} ", res, r.per_resolution[0].components);
        }
    }
    detail += &format!("({} cubes; unresolvable at scale: {:?})", suite.len(), excluded.iter().map(|c| &c.lower).collect::<Vec<_>>());
    report(3, ok && !suite.is_empty(), detail);
    assert!(ok && !suite.is_empty());
}

#[test]
fn criterion_4_paths() {
    let s = series();
    let a2 = RegionSpec::a_n(2);
    let cube = Cube::around(&[c(0.0, 0.0); 2], 0.6875).unwrap();
    let g = cube.lattice(PATH_RESOLUTION).unwrap();
    let table = VTable::for_grid(s, &g, None).unwrap();
    let free = free_mask(&g, &cube, &Polydisc::unit(2), &RegionSpec::complement(a2.clone()), &table);
    let nodes: Vec<usize> = (0..g.node_count()).filter(|&n| free.get(n)).collect();
    let step = nodes.len() / (2 * PATH_PAIRS + 1);
    let mut built = 0;
    let mut verified = 0;
    let mut vertices = 0;
    for p in 0..PATH_PAIRS {
        let z = g.coords(nodes[(2 * p + 1) * step]);
        let w = g.coords(nodes[(2 * p + 2) * step]);
        if let Ok(pw) = build_path(&z, &w, &cube, &a2, s, &table, &PathConfig::default()) {
            built += 1;
            vertices += pw.vertices.len();
            let all_in = pw.certificates.iter().all(|c| c.verdict == Verdict::CertifiedIn);
            // independent re-verification straight from the series
            if all_in && verify_path(&pw, &z, &w, &cube, &a2, s) {
                verified += 1;
            }
        }
    }
    let ok = built == PATH_PAIRS && verified == PATH_PAIRS;
    report(4, ok, format!("built {built}/{PATH_PAIRS}, verified {verified}/{PATH_PAIRS}, {vertices} vertices"));
    assert!(ok);
}

#[test]
fn criterion_5_prop_b() {
    let s = series();
    let witness = a2_witness(ORACLE_RESOLUTION);
    let om = omega_b_257();
    let env = envelope_mask(vec![om.omega.clone(); 2], 1.0).unwrap();
    let w = env.witness.clone().unwrap_or_default();
    let resum = if w.is_empty() { f64::NAN } else { om.omega.value(w[0]) + om.omega.value(w[1]) };
    let strict_ok = env.strict && resum >= 1.0 - REVERIFY_SLACK && !env.contains(&w);

    let q = c(-0.5, -0.5);
    let f = Ball::disc(q, 0.0);
    let sb = build_s_prop_b(1, 1, &f, &f, &CertificationConfig::default(), s).unwrap();
    let g = make_grid(Polydisc::unit(1), S_CELL_RESOLUTION).unwrap().power(2).unwrap();
    let table = VTable::for_grid(s, &g, None).unwrap();
    let cell = first_full_cell(&conservative_mask(&sb, &g, &table));

    let ok = witness > WITNESS_FLOOR && strict_ok && cell.is_none();
    report(
        5,
        ok,
        format!("1/(2M+1)={witness:.5}; strict={} witness sum={resum:.6}; full S cell={cell:?}", env.strict),
    );
    assert!(ok);
}

#[test]
fn criterion_6_prop_c() {
    let s = series();
    let q = c(-0.5, -0.5);
    let set = build_s_prop_c(&Ball::disc(q, 0.0), &CertificationConfig::default(), s).unwrap();
    let mut samples = vec![c(0.0, 0.0), c(0.3, 0.1), c(-0.7, 0.2)];
    samples.extend(s.poles().iter().copied().filter(|p| p.norm() < 1.0).take(12));
    let fid = check_fiber_identity(&set.s, q, &samples, s).unwrap();

    let om = omega_b_257();
    let w0 = om.omega.center_value();
    let violations = a_point_violations(&om.omega, &om.certified, DEFAULT_DELTA_CLASSIFY);
    let (env, check) = match build_domain_prop_c(&om.omega, &om.certified, 1024, s) {
        Ok(v) => v,
        Err(e) => {
            report(6, false, format!("{e}"));
            panic!("{e}");
        }
    };
    let w = env.witness.clone().unwrap_or_default();
    let resum = if w.is_empty() { f64::NAN } else { om.omega.value(w[0]) + om.omega.value(w[1]) + om.omega.value(w[2]) };
    let ok = fid.holds
        && fid.pairs_checked > 0
        && w0 >= OMEGA_ZERO_FLOOR
        && violations.is_empty()
        && env.strict
        && resum >= 2.0 - REVERIFY_SLACK
        && check.t_samples > 0
        && check.above_two_thirds > 0;
    report(
        6,
        ok,
        format!(
            "fiber pairs {} (skipped {}); omega_B(0)={w0:.5}; T samples {} in Omega; witness sum={resum:.6}; nodes above 2/3: {}",
            fid.pairs_checked, fid.pairs_skipped, check.t_samples, check.above_two_thirds
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_product_property() {
    let s = series();
    let g = make_grid(Polydisc::unit(1), PRODUCT_RESOLUTION).unwrap();
    let om = omega_b(PRODUCT_RESOLUTION);
    let pe = product_envelope(&om.omega, &om.omega).unwrap();
    let bit_equal = pe.center_value().to_bits() == om.omega.center_value().to_bits();
    let g2 = g.power(2).unwrap();
    let n = g.node_count();
    let ob = GridFunction::constant(&g2, 1.0)
        .unwrap()
        .map_values(|k, v| if om.contact.get(k / n) && om.contact.get(k % n) { 0.0 } else { v })
        .unwrap();
    let bb = line_sweep_envelope(&ob, SWEEP_TOLERANCE, SWEEP_MAX).unwrap();
    let bb_ok = bb.converged && bb.values.center_value() >= pe.center_value() - LINE_SWEEP_SLACK;

    let table = VTable::for_grid(s, &g2, Some(cell_rho(&g2))).unwrap();
    let contact = certified_cell_mask(&RegionSpec::a_n(2), &g2, &table);
    let ob = GridFunction::constant(&g2, 1.0).unwrap().map_values(|k, v| if contact.get(k) { 0.0 } else { v }).unwrap();
    let a2 = line_sweep_envelope(&ob, SWEEP_TOLERANCE, SWEEP_MAX).unwrap();
    let witness = a2_witness(PRODUCT_RESOLUTION);
    let a2_ok = a2.converged && witness <= a2.values.center_value() + WITNESS_SWEEP_SLACK;
    let ok = bit_equal && bb_ok && a2_ok;
    report(
        7,
        ok,
        format!(
            "product(0,0)={:.6} bit-equal={bit_equal}; BxB sweep(0,0)={:.6}; A2 witness={witness:.5} <= sweep(0,0)={:.5}",
            pe.center_value(),
            bb.values.center_value(),
            a2.values.center_value()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_blowup() {
    let w = build_blowup(InnerDomain::unit_disc(), BLOWUP_POLES, CoefficientRule::default()).unwrap();
    let offsets = decade_offsets(BLOWUP_DECADES);
    let mut weakest = f64::INFINITY;
    let mut all = true;
    for k in 0..BLOWUP_POLES {
        let v = verify_blowup(&w, k, &offsets, BLOWUP_THRESHOLD).unwrap();
        all &= v.passes;
        weakest = weakest.min(*v.moduli.last().unwrap());
    }
    let g = make_grid(Polydisc::unit(1), ORACLE_RESOLUTION).unwrap();
    let compact = check_compact_bound(&w, &g, COMPACT_DELTA);
    let ok = all && compact.holds;
    report(
        8,
        ok,
        format!("weakest final |f|={weakest:.1}; compact max={:.4} <= bound {:.4}", compact.max_modulus, compact.bound),
    );
    assert!(ok);
}

#[test]
fn criterion_9_property_suites() {
    let s = series();
    let cfg = SolverConfig::default();
    let g = make_grid(Polydisc::unit(1), 33).unwrap();
    let mut detail = String::new();

    // set monotonicity: larger contact set, smaller h
    let small = solve_h(&ObstacleProblem::disc_in_disc(&g, c(0.1, 0.0), 0.2, cfg).unwrap()).unwrap();
    let large = solve_h(&ObstacleProblem::disc_in_disc(&g, c(0.1, 0.0), 0.35, cfg).unwrap()).unwrap();
    let set_mono = large.values.masked().zip(small.values.masked()).all(|((_, a), (_, b))| a <= b + 1e-9);
    detail += &format!("set-monotone={set_mono} ");

    // domain monotonicity: smaller domain, larger h
    let p = ObstacleProblem::disc_in_disc(&g, c(0.0, 0.0), 0.25, cfg).unwrap();
    let outer = solve_h(&p).unwrap();
    let inner = solve_h(&p.restricted(0.75).unwrap()).unwrap();
    let dom_mono = inner.values.masked().all(|(n, v)| v + 1e-9 >= outer.values.value(n));
    detail += &format!("domain-monotone={dom_mono} ");

    // certificates survive refinement of the truncation
    let coarse = TruncatedLogSeries::standard(250).unwrap();
    let b = RegionSpec::b();
    let pts: Vec<ComplexPoint> = s.poles().iter().filter(|p| p.norm() < 1.0).take(40).flat_map(|p| [*p, p + c(1e-9, 0.0), p + c(0.0, 1e-7)]).collect();
    let sound = pts.iter().all(|p| {
        let before = b.member(&[*p], &coarse);
        let after = b.member(&[*p], s);
        before.verdict != Verdict::CertifiedIn || (after.verdict == Verdict::CertifiedIn && after.bound <= before.bound)
    });
    detail += &format!("refinement-sound={sound} ");

    // flood fill stable under refinement on the suite
    let obstruction = RegionSpec::complement(RegionSpec::a_n(2));
    let stable = cube_suite(2, SUITE_HALF_SIDE).iter().all(|cube| {
        let counts: Vec<usize> = [33usize, 65]
            .iter()
            .map(|&res| {
                let lg = cube.lattice(res).unwrap();
                let table = VTable::for_grid(s, &lg, None).unwrap();
                connected_components(&free_mask(&lg, cube, &Polydisc::unit(2), &obstruction, &table)).count
            })
            .collect();
        counts[0] == counts[1]
    });
    detail += &format!("flood-fill-stable={stable} ");

    // persistence round trip
    let mut buf = Vec::new();
    write_grid_function(&outer.values, &mut buf).unwrap();
    let back = read_grid_function(buf.as_slice(), Some(Polydisc::unit(1))).unwrap();
    let round = back.values().iter().zip(outer.values.values()).all(|(a, b)| a.to_bits() == b.to_bits()) && back.mask() == outer.values.mask();
    detail += &format!("round-trip={round}");

    let ok = set_mono && dom_mono && sound && stable && round;
    report(9, ok, detail);
    assert!(ok);
}
