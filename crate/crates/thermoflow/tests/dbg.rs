// temporary debug integration test
use thermoflow::bench::{defaults_for};
use thermoflow::solver::{sparse_lu, lu_solve};

#[test]
fn dbg_mms_matrix() {
    let spec = defaults_for("conv-study");
    // rebuild the level-0 discretization exactly as the driver does
    let r = 3.5f64;
    let (ra, pr, di) = (spec.ra, spec.pr, spec.di);
    use std::sync::Arc;
    use thermoflow::formulation::*;
    use thermoflow::rheology::*;
    use thermoflow::mesh::*;
    let mesh = Arc::new(generate_rect_mesh(8, 8, (1.0, 1.0), 0.0).unwrap());
    let u_e: VecFn<f64> = Arc::new(|x, y| { let (a,b) = thermoflow::bench::mms::exact_velocity(x,y); [a,b] });
    let th_e: ScalFn<f64> = Arc::new(|x, y| thermoflow::bench::mms::exact_temperature(x,y));
    let bcs = BcSet {
        velocity: [BoundaryMarker::Left, BoundaryMarker::Right, BoundaryMarker::Top, BoundaryMarker::Bottom]
            .iter().map(|&m| (m, VelocityBc::Dirichlet(u_e.clone()))).collect(),
        temperature: [BoundaryMarker::Left, BoundaryMarker::Right, BoundaryMarker::Top, BoundaryMarker::Bottom]
            .iter().map(|&m| (m, TemperatureBc::Dirichlet(th_e.clone()))).collect(),
    };
    let disc = Discretization::new(
        mesh,
        FieldConfig { formulation: Formulation::ThreeField, pair: Pair::TaylorHood { k: 2 }, temp_degree: 2, stress_traceless: false },
        ProblemForm::Rayleigh { ra, pr, di, theta_ref: 0.0 },
        ScalarLaw::Exponential { a: 1.0, b: 4.0 },
        RheologyModel::PowerLaw { r: 2.0, k: ScalarLaw::Exponential { a: 1.0, b: -0.25 } },
        StabilizationConfig::default(),
        bcs,
    ).unwrap().with_sources(
        Some(Arc::new(move |x, y| { let (f1,f2) = thermoflow::bench::mms::forcing_momentum(x,y,r,ra,pr); [f1,f2] })),
        Some(Arc::new(move |x, y| thermoflow::bench::mms::forcing_energy_shifted(x,y,r,ra,di,0.0))),
    );
    let state = disc.lifted_zero_state();
    let (mut sys, residual) = disc.assemble_raw(&state);
    let mut rhs: Vec<f64> = residual.iter().map(|v| -v).collect();
    disc.constrain(&mut sys, &mut rhs, &state);
    sys.matrix.eliminate_dirichlet(&mut rhs, &[(disc.pressure_offset(), 0.0)]);
    let n = sys.ndof;
    eprintln!("ndof = {n}, nnz = {}", sys.matrix.nnz());
    // dense rank check via the small Gaussian elimination
    let mut dense = sys.matrix.to_dense();
    let mut b2 = rhs.clone();
    let ok = thermoflow::fem::smallmat::solve_dbg(&mut dense, &mut b2);
    eprintln!("dense solve ok: {ok:?}");
    // sparse LU
    match sparse_lu(&sys.matrix) {
        Ok(f) => {
            let x = lu_solve(&f, &rhs);
            let mut ax = vec![0.0; n];
            sys.matrix.matvec(&x, &mut ax);
            let res: f64 = ax.iter().zip(&rhs).map(|(a,b)| (a-b).powi(2)).sum::<f64>().sqrt();
            let bn: f64 = rhs.iter().map(|v| v*v).sum::<f64>().sqrt();
            eprintln!("sparse residual rel = {}", res / bn);
        }
        Err(e) => eprintln!("sparse_lu failed: {e}"),
    }
    {
        let x = lu_solve(&sparse_lu(&sys.matrix).unwrap(), &rhs);
        let mut z2 = state.clone();
        for i in 0..n { z2[i] += x[i]; }
        let to = disc.layout.fields[disc.theta_idx].offset;
        let tn = disc.layout.fields[disc.theta_idx].space.ndof();
        let tmin = z2[to..to+tn].iter().cloned().fold(f64::INFINITY, f64::min);
        let tmax = z2[to..to+tn].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        eprintln!("after update: theta range [{tmin}, {tmax}], max|dz| = {}",
            x.iter().cloned().fold(0.0f64, |a,b| a.max(b.abs())));
        let (sys2, r2) = disc.assemble_raw(&z2);
        let finite = sys2.matrix.values.iter().all(|v| v.is_finite());
        let rfin = r2.iter().all(|v| v.is_finite());
        eprintln!("second jacobian finite: {finite}, residual finite: {rfin}");
    }
    // full newton warm-up, step by step
    use thermoflow::solver::{newton_solve, NewtonConfig, LinearStrategy};
    let out = newton_solve(&disc, &state, &NewtonConfig::default(), &LinearStrategy::MonolithicDirect);
    match out {
        Ok(o) => eprintln!("newton r=2: converged={} iters={} norms={:?}", o.converged, o.report.newton_iters, o.report.residual_norms),
        Err(e) => eprintln!("newton r=2 failed: {e}"),
    }
}
