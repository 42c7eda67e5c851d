use pqlap::barrier::BarrierBuilder;
use pqlap::mesh::{DomainSpec, Mesh};
use pqlap::plap::ScalarSolveOptions;
use pqlap::problem::ProblemParams;

fn main() {
    let params = ProblemParams {
        p: 2.0, q: 2.0,
        alpha1: -0.5, beta1: 3.0, alpha2: 3.0, beta2: -0.5,
        lambda: 1.0, gamma: 2.0,
    };
    let spec = DomainSpec::interval(0.0, 1.0);
    let mesh = Mesh::build(spec, 64).unwrap();
    let tilde = Mesh::build_enlarged(spec, 64).unwrap();
    let b = BarrierBuilder::new(&params, &mesh, &tilde, None, &ScalarSolveOptions::default()).unwrap();
    println!("theta = {}, sigma = {}, k = {}", b.class.theta, b.class.sigma, b.cfg.k);
    for lambda in [0.5, 1.0, 5.0, 50.0] {
        match b.select_c(lambda) {
            Ok((c, cert)) => println!("lambda={lambda}: PASS at C={c}, worst {} = {:.3e}", cert.worst().name, cert.worst().worst),
            Err(e) => println!("lambda={lambda}: {e}"),
        }
    }
}
