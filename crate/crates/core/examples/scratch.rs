// scratch driver for calibration during development; not part of the crate API
use newton_schur::*;
use std::time::Instant;

fn run(shape: Shape, jc: u32, jh: u32) {
    let spec = DomainSpec::new(shape);
    let coarse = MeshSize::new(jc).unwrap();
    let fine = MeshSize::new(jh).unwrap();
    let t0 = Instant::now();
    let mesh = build_mesh(spec, coarse, fine).unwrap();
    let (a, m, _) = assemble(&mesh, &Coefficient::laplace()).unwrap();
    let part = partition(&mesh).unwrap();
    let bv = blocks(&a, &m, &part).unwrap();
    let t_setup = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let lam = reference_volume_eig(&a, &m, &EigRequest::reference()).unwrap();
    let t_ref = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let rho0 = coarse_rho0(spec, coarse, &Coefficient::laplace()).unwrap();
    let t_coarse = t2.elapsed().as_secs_f64();

    let t3 = Instant::now();
    let cfg = NewtonConfig::new(rho0).with_oracle(lam.values[0]);
    let trace = run_newton(&bv, &cfg).unwrap();
    let t_newton = t3.elapsed().as_secs_f64();

    println!(
        "{shape:?} H=2^-{jc} h=2^-{jh}: free={} |G|={} lam={:.10} rho0={:.10}",
        part.n_free(),
        part.n_interface(),
        lam.values[0],
        rho0
    );
    let eps = trace.eps_sequence().unwrap();
    let eps_str: Vec<String> = eps.iter().map(|e| format!("{e:.4e}")).collect();
    println!(
        "  eps: [{}] converged={} steps={}",
        eps_str.join(", "),
        trace.converged,
        trace.n_steps()
    );
    let eta = convergence_factor(&trace).unwrap();
    let eta_str: Vec<String> = eta
        .iter()
        .map(|e| e.map_or("-".into(), |v| format!("{v:.4e}")))
        .collect();
    println!("  eta: [{}]", eta_str.join(", "));
    println!(
        "  times: setup {t_setup:.2}s ref {t_ref:.2}s coarse {t_coarse:.2}s newton {t_newton:.2}s; identity dev {:.2e}",
        newton_identity_check(&trace)
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.len() == 4 {
        let shape = match args[1].as_str() {
            "square" => Shape::UnitSquare,
            "cube" => Shape::UnitCube,
            "lshape" => Shape::LShape2D,
            _ => panic!("unknown shape"),
        };
        run(shape, args[2].parse().unwrap(), args[3].parse().unwrap());
        return;
    }
    // default calibration sweep
    run(Shape::UnitCube, 1, 2);
    run(Shape::UnitCube, 1, 3);
    run(Shape::UnitCube, 1, 4);
    run(Shape::LShape2D, 2, 6);
    run(Shape::LShape2D, 3, 6);
    run(Shape::LShape2D, 4, 6);
    run(Shape::LShape2D, 5, 6);
}
