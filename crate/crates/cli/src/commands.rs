use std::path::Path;

use anyhow::{bail, Result};
use pluripot_core::blowup::{build_blowup, check_compact_bound, decade_offsets, verify_blowup, CoefficientRule, InnerDomain};
use pluripot_core::cross::{
    a_point_violations, build_domain_prop_c, check_fiber_identity, conservative_mask, envelope_mask, first_full_cell,
    omega_for_region, RegionOmega,
};
use pluripot_core::extremal::{
    certified_cell_mask, certified_point_mask, classify_dichotomy, disc_oracle, solve_h, solve_omega,
    witness_lower_bound_with_max, Dichotomy, SolverReport, DEFAULT_DELTA_CLASSIFY,
};
use pluripot_core::series::{build_s_prop_b, build_s_prop_c, plurithin_certificate, Ball, CertificationConfig, VTable};
use pluripot_core::topology::{build_path, check_separation, cube_suite, resolvable_cube, verify_path, Cube};
use pluripot_core::*;
use serde_json::json;

use crate::config::{ContactSet, ExperimentConfig};
use crate::report::{Report, Scale};

fn origin(n: usize) -> Vec<ComplexPoint> {
    vec![ComplexPoint::new(0.0, 0.0); n]
}

/// Half the largest cell diagonal.
fn cell_rho(g: &Grid) -> f64 {
    let h = g.spacing();
    (0..g.complex_dim()).map(|j| 0.5 * h[2 * j].hypot(h[2 * j + 1])).fold(0.0, f64::max)
}

fn omega_region(region: &RegionSpec, res: usize, cfg: &ExperimentConfig, series: &TruncatedLogSeries) -> Result<RegionOmega> {
    let g = make_grid(Polydisc::unit(1), res)?;
    let table = VTable::for_grid(series, &g, Some(cell_rho(&g)))?;
    Ok(omega_for_region(region, &g, cfg.solver, &table)?)
}

/// Runs every cube through the flood fill and records one check per cube.
fn separation_checks(
    report: &mut Report,
    label: &str,
    cubes: &[Cube],
    obstruction: &RegionSpec,
    resolutions: &[usize],
    series: &TruncatedLogSeries,
) -> Result<()> {
    let ambient = Polydisc::unit(obstruction.dimension()?);
    let mut summaries = Vec::new();
    for cube in cubes {
        let mut per = Vec::new();
        let mut ok = true;
        for &res in resolutions {
            let table = VTable::for_grid(series, &cube.lattice(res)?, None)?;
            let r = check_separation(cube, &ambient, obstruction, &[res], &table)?;
            ok &= r.non_separating;
            per.extend(r.per_resolution);
        }
        let detail = per.iter().map(|v| format!("{}:{}", v.resolution, v.components)).collect::<Vec<_>>().join(" ");
        report.check(&format!("{label} cube {:?}", cube.lower), ok, detail);
        summaries.push(json!({ "cube": cube, "per_resolution": per }));
    }
    report.quantity(
        &format!("{label} components"),
        summaries,
        "topology",
        json!({ "resolutions": resolutions }),
        Scale::Grid,
    );
    Ok(())
}

pub fn prop_a(cfg: &ExperimentConfig, _out: &Path) -> Result<Report> {
    let c = &cfg.prop_a;
    let mut report = Report::new("prop-a", (&cfg.series, c));
    let series = cfg.series.build()?;
    let n = c.dimension;
    let region = c.region.clone().unwrap_or_else(|| RegionSpec::a_n(n));

    let cert = plurithin_certificate(&origin(n), &region, &series, c.thin_radius, c.thin_samples)?;
    let params = json!({ "terms": series.len(), "radius": c.thin_radius, "samples": c.thin_samples });
    report.quantity("u(0)", cert.value, "series", params.clone(), if cert.value_exact { Scale::Exact } else { Scale::Grid });
    report.quantity("plurithin certificate", &cert, "series", params, Scale::Grid);
    report.check(
        "plurithin at 0",
        cert.passes && cert.value == 0.0 && cert.sup_bound <= -1.0,
        format!("u(0) = {}, sup over region samples {} ({} of {} samples in region)", cert.value, cert.sup_bound, cert.in_region, cert.sampled),
    );

    // no relatively open piece of a real hypersurface, as a corollary of non-separation
    let coarsest = c.resolutions.iter().copied().min().unwrap_or(3);
    let (cubes, excluded): (Vec<Cube>, Vec<Cube>) =
        cube_suite(n, c.half_side).into_iter().partition(|cube| resolvable_cube(cube, &series, coarsest));
    report.quantity("unresolvable cubes", &excluded, "topology", json!({ "resolution": coarsest }), Scale::Grid);
    if cubes.is_empty() {
        report.check("cube suite", false, "no resolvable suite cube");
    }
    separation_checks(&mut report, "complement", &cubes, &RegionSpec::complement(region), &c.resolutions, &series)?;
    Ok(report)
}

pub fn prop_b(cfg: &ExperimentConfig, _out: &Path) -> Result<Report> {
    let c = &cfg.prop_b;
    let mut report = Report::new("prop-b", (&cfg.series, c));
    let series = cfg.series.build()?;
    let f = Ball::disc(c.ball_center, c.ball_radius);
    let s = build_s_prop_b(1, 1, &f, &f, &CertificationConfig::default(), &series)?;

    let g = make_grid(Polydisc::unit(1), c.cell_resolution)?.power(2)?;
    let table = VTable::for_grid(&series, &g, None)?;
    let cell = first_full_cell(&conservative_mask(&s, &g, &table));
    report.check("int S empty at scale", cell.is_none(), format!("first full cell: {cell:?}"));

    let cubes = c
        .cube_centers
        .iter()
        .map(|ctr| Cube::around(ctr, c.half_side))
        .collect::<Result<Vec<_>, _>>()?;
    separation_checks(&mut report, "S", &cubes, &s, &[c.separation_resolution], &series)?;

    // 1/(2M+1) for 𝒜_2 on the slice {(z, 0)} with M = 2 max v
    let g1 = make_grid(Polydisc::unit(1), c.resolution)?;
    let v = series.v_grid(&g1)?;
    let vmax = v.max_on_domain().map_or(0.0, |(_, m)| m);
    let a_mask = certified_point_mask(&RegionSpec::a_n(1), &g1, &series);
    let wit = witness_lower_bound_with_max(&v, &a_mask, 2.0 * vmax)?;
    let params = json!({ "terms": series.len(), "resolution": c.resolution });
    report.quantity("M_hat", wit.m_hat, "extremal", params.clone(), Scale::Grid);
    report.quantity("1/(2M_hat+1)", wit.value_at_zero, "extremal", params.clone(), Scale::Grid);
    report.check("witness lower bound", wit.value_at_zero > c.witness_floor, format!("{} > {}", wit.value_at_zero, c.witness_floor));

    let om = omega_region(&RegionSpec::b(), c.resolution, cfg, &series)?;
    let env = envelope_mask(vec![om.omega.clone(); 2], 1.0)?;
    let w = env.witness.clone().unwrap_or_default();
    let resum = if w.is_empty() { f64::NAN } else { om.omega.value(w[0]) + om.omega.value(w[1]) };
    report.quantity("envelope", env.report(), "cross", params, Scale::Grid);
    report.check(
        "strict envelope",
        env.strict && resum >= 1.0 && !env.contains(&w),
        format!("witness {:?}, omega sum {resum}", w.iter().map(|k| om.omega.grid().coords(*k)[0]).collect::<Vec<_>>()),
    );
    Ok(report)
}

pub fn prop_c(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    let c = &cfg.prop_c;
    let mut report = Report::new("prop-c", (&cfg.series, c));
    let series = cfg.series.build()?;
    let set = build_s_prop_c(&Ball::disc(c.ball_center, c.ball_radius), &CertificationConfig::default(), &series)?;
    let mut samples = c.fiber_samples.clone();
    samples.extend(series.poles().iter().copied().filter(|p| p.norm() < 1.0).take(c.pole_samples));
    let fid = check_fiber_identity(&set.s, c.ball_center, &samples, &series)?;
    report.quantity("fiber identity", &fid, "cross", json!({ "samples": samples.len() }), Scale::Grid);
    report.check(
        "S1 = S2 = S3",
        fid.holds && fid.pairs_checked > 0,
        format!("{} pairs checked, {} undecided", fid.pairs_checked, fid.pairs_skipped),
    );

    let om = omega_region(&RegionSpec::b(), c.resolution, cfg, &series)?;
    report.dump_grid(out, "omega_b", &om.omega)?;
    let params = json!({ "terms": series.len(), "resolution": c.resolution });
    let w0 = om.omega.center_value();
    report.quantity("omega_B(0)", w0, "cross", params.clone(), Scale::Grid);
    report.check("omega_B(0) positive", w0 >= c.omega_floor, format!("{w0} >= {}", c.omega_floor));
    let violations = a_point_violations(&om.omega, &om.certified, DEFAULT_DELTA_CLASSIFY);
    report.check("omega_B vanishes on B", violations.is_empty(), format!("{} violations", violations.len()));

    let (env, dc) = match build_domain_prop_c(&om.omega, &om.certified, c.t_stride, &series) {
        Ok(v) => v,
        Err(e @ CrossError::Containment { .. }) => {
            report.check("T inside Omega at samples", false, e.to_string());
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    let w = env.witness.clone().unwrap_or_default();
    let resum: f64 = if w.is_empty() { f64::NAN } else { w.iter().map(|k| om.omega.value(*k)).sum() };
    report.check("T inside Omega at samples", dc.t_samples > 0, format!("{} of {} samples in T", dc.t_samples, dc.samples));
    report.check("Omega strictly smaller than E^3", env.strict && resum >= 2.0, format!("witness omega sum {resum}"));
    report.check("nodes with omega_B > 2/3", dc.above_two_thirds > 0, format!("{} nodes", dc.above_two_thirds));
    report.quantity("domain check", &dc, "cross", params, Scale::Grid);
    Ok(report)
}

pub fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    let c = &cfg.solve;
    let mut report = Report::new("solve", (c, &cfg.solver));
    let g = make_grid(Polydisc::unit(1), c.resolution)?;
    let p = ObstacleProblem::disc_in_disc(&g, c.center, c.radius, cfg.solver)?;
    let s = solve_h(&p)?;
    report.dump_grid(out, "h", &s.values)?;
    let params = json!({ "resolution": c.resolution, "radius": c.radius, "center": c.center });
    report.quantity("solver", SolverReport::from_solution(&s), "extremal", params.clone(), Scale::Grid);
    report.check("converged", s.converged, format!("{} iterations, residual {:e}", s.iterations, s.residual));
    if c.center == ComplexPoint::new(0.0, 0.0) {
        let err = s.values.masked().map(|(n, v)| (v - disc_oracle(g.coords(n)[0], c.radius)).abs()).fold(0.0, f64::max);
        report.quantity("max oracle error", err, "extremal", params, Scale::Grid);
        report.check("oracle", err <= c.oracle_tolerance, format!("{err:e} <= {}", c.oracle_tolerance));
    }
    Ok(report)
}

pub fn dichotomy(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    let c = &cfg.dichotomy;
    let mut report = Report::new("dichotomy", (&cfg.series, c, &cfg.solver));
    let g = make_grid(Polydisc::unit(1), c.resolution)?;
    let mask = match &c.contact {
        ContactSet::Domain => g.domain_mask(),
        ContactSet::Disc { center, radius } => g.mask_where(|z| (z[0] - center).norm() <= *radius),
        ContactSet::Region { region } => {
            let series = cfg.series.build()?;
            let table = VTable::for_grid(&series, &g, Some(cell_rho(&g)))?;
            certified_cell_mask(region, &g, &table)
        }
    };
    let o = solve_omega(&ObstacleProblem::new(&g, &mask, cfg.solver)?, c.levels)?;
    report.dump_grid(out, "omega", &o.solution.values)?;
    let params = json!({ "resolution": c.resolution, "levels": c.levels, "delta": c.delta });
    report.quantity("solver", SolverReport::from_omega(&o), "extremal", params.clone(), Scale::Grid);
    match classify_dichotomy(&o, c.delta) {
        Ok(d) => {
            let ok = d.verdict == Dichotomy::IdenticallyZero || d.sup >= c.sup_floor;
            report.check("dichotomy", ok, format!("{:?}, sup {}", d.verdict, d.sup));
            report.quantity("verdict", d, "extremal", params, Scale::Grid);
        }
        Err(e) => report.check("dichotomy", false, e.to_string()),
    }
    Ok(report)
}

pub fn connectivity(cfg: &ExperimentConfig, _out: &Path) -> Result<Report> {
    let c = &cfg.connectivity;
    let mut report = Report::new("connectivity", (&cfg.series, c));
    let series = cfg.series.build()?;
    let obstruction = c.obstruction.clone().unwrap_or_else(|| RegionSpec::complement(RegionSpec::a_n(2)));
    let cubes = if c.cube_centers.is_empty() {
        cube_suite(obstruction.dimension()?, c.half_side)
    } else {
        c.cube_centers.iter().map(|ctr| Cube::around(ctr, c.half_side)).collect::<Result<Vec<_>, _>>()?
    };
    separation_checks(&mut report, "obstruction", &cubes, &obstruction, &c.resolutions, &series)?;
    Ok(report)
}

pub fn path(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    let c = &cfg.path;
    let mut report = Report::new("path", (&cfg.series, c));
    if c.z.len() != c.w.len() || c.z.len() != c.cube_center.len() {
        bail!("invalid config: z, w and cube_center must have the same length");
    }
    let series = cfg.series.build()?;
    let region = c.region.clone().unwrap_or_else(|| RegionSpec::a_n(c.z.len()));
    let cube = Cube::around(&c.cube_center, c.half_side)?;
    let pc = pluripot_core::topology::PathConfig {
        step_fraction: c.step_fraction,
        max_refinements: c.max_refinements,
        candidates: c.candidates,
    };
    match build_path(&c.z, &c.w, &cube, &region, &series, &series, &pc) {
        Ok(p) => {
            report.write_json(out, "path", &p)?;
            let ok = verify_path(&p, &c.z, &c.w, &cube, &region, &series);
            report.quantity("vertices", p.vertices.len(), "topology", json!({ "step": p.step }), Scale::Exact);
            report.check("path verified", ok, format!("{} vertices, step {}", p.vertices.len(), p.step));
        }
        Err(e) => report.check("path built", false, e.to_string()),
    }
    Ok(report)
}

pub fn blowup(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    let c = &cfg.blowup;
    let mut report = Report::new("blowup", c);
    let w = build_blowup(InnerDomain::unit_disc(), c.poles, CoefficientRule::Geometric { ratio: c.ratio })?;
    report.write_json(out, "witness", &w)?;
    let offsets = decade_offsets(c.decades);
    for k in 0..c.poles {
        let v = verify_blowup(&w, k, &offsets, c.threshold)?;
        report.write_text(out, &format!("approach_{k}.csv"), &v.to_csv())?;
        report.check(
            &format!("blow-up at pole {k}"),
            v.passes,
            format!("final |f| {:e} vs threshold {:e}", v.moduli.last().copied().unwrap_or(f64::NAN), c.threshold),
        );
    }
    let g = make_grid(Polydisc::unit(1), c.resolution)?;
    let cc = check_compact_bound(&w, &g, c.delta);
    report.check("bounded on compacta", cc.holds, format!("max {} <= {}", cc.max_modulus, cc.bound));
    report.quantity("compact check", cc, "blowup", json!({ "resolution": c.resolution, "delta": c.delta }), Scale::Grid);
    Ok(report)
}

pub fn envelope(cfg: &ExperimentConfig, out: &Path) -> Result<Report> {
    let c = &cfg.envelope;
    let mut report = Report::new("envelope", (&cfg.series, c));
    let series = cfg.series.build()?;
    let om = omega_region(&c.region, c.resolution, cfg, &series)?;
    report.dump_grid(out, "omega", &om.omega)?;
    let env = envelope_mask(vec![om.omega.clone(); c.factors], c.threshold)?;
    let r = env.report();
    report.check("envelope computed", r.in_fraction.is_finite(), format!("strict = {}, in fraction {}", r.strict, r.in_fraction));
    report.quantity(
        "envelope",
        r,
        "cross",
        json!({ "resolution": c.resolution, "factors": c.factors, "threshold": c.threshold }),
        Scale::Grid,
    );
    Ok(report)
}
