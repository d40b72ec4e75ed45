// Temporary experiment harness (deleted before shipping).
use std::sync::Arc;
use std::time::Instant;

use eit_core::field::Field;
use eit_core::forward::{simulate, SimOptions};
use eit_core::geom::Region;
use eit_core::mesh::{generate_disk_mesh, BoundaryArc};
use eit_core::phantom::PhantomSpec;
use eit_core::recon::{metrics, reconstruct, ReconConfig};

#[test]
#[ignore]
fn fig4_circular_full_data() {
    let t0 = Instant::now();
    let fine = Arc::new(generate_disk_mesh(0.0105).unwrap());
    let recon_mesh = Arc::new(generate_disk_mesh(1.0 / 31.0).unwrap());
    println!("fine nodes {} recon nodes {}", fine.num_nodes(), recon_mesh.num_nodes());
    let spec = PhantomSpec::circular();
    let sigma_true = spec.rasterize(&fine);
    let out = simulate(&sigma_true, &BoundaryArc::full(), &recon_mesh,
        &SimOptions { noise_level: 0.01, seed: 7, allow_same_mesh: false }).unwrap();
    println!("simulate: {:?} ratio {:.2} noise_std {:.5}", t0.elapsed(), out.mesh_ratio, out.data.noise_std);

    let sigma0 = Field::constant(recon_mesh.clone(), 1.0);
    let config = ReconConfig::new(1e-3);
    let t1 = Instant::now();
    let result = reconstruct(&out.data, &recon_mesh, &sigma0, &config).unwrap();
    let d = &result.diagnostics;
    println!("recon: {:?} iters {} termination {:?}", t1.elapsed(), d.iterations.len(), d.termination);
    for r in d.iterations.iter().take(8) {
        println!("  i={} psi={:.5} disc={:.5} pen={:.5} s={:.3} bt={} nnz={}", r.iter, r.psi, r.discrepancy, r.penalty, r.step, r.backtracks, r.nnz);
    }
    if d.iterations.len() > 8 {
        for r in d.iterations.iter().rev().take(4).collect::<Vec<_>>().iter().rev() {
            println!("  i={} psi={:.6} disc={:.6} pen={:.6} s={:.3} bt={} nnz={}", r.iter, r.psi, r.discrepancy, r.penalty, r.step, r.backtracks, r.nnz);
        }
    }
    // Quality metrics
    let argmax = result.delta_gamma.argmax();
    let p = result.delta_gamma.mesh().nodes()[argmax];
    let dist = ((p[0] - 0.4).powi(2) + p[1].powi(2)).sqrt();
    let support = Region::Disk { center: [0.4, 0.0], radius: 0.25 };
    let (mean_dg, _) = metrics(&result.delta_gamma, &support).unwrap();
    let (sigma_b, sigma_max) = metrics(&result.sigma, &support).unwrap();
    println!("argmax at {:?} dist {:.3}; mean dgamma over disk {:.3} (true 4); sigma_B {:.3} sigma_max {:.3}", p, dist, mean_dg, sigma_b, sigma_max);
    println!("total {:?}", t0.elapsed());
}

#[test]
#[ignore]
fn prior_and_alpha_probes() {
    let fine = Arc::new(generate_disk_mesh(0.0105).unwrap());
    let recon_mesh = Arc::new(generate_disk_mesh(1.0 / 31.0).unwrap());
    let spec = PhantomSpec::circular();
    let sigma_true = spec.rasterize(&fine);
    let out = simulate(&sigma_true, &BoundaryArc::full(), &recon_mesh,
        &SimOptions { noise_level: 0.01, seed: 7, allow_same_mesh: false }).unwrap();
    let sigma0 = Field::constant(recon_mesh.clone(), 1.0);
    let support = Region::Disk { center: [0.4, 0.0], radius: 0.25 };

    for (label, alpha, delta_r, refine) in [
        ("no prior a=1e-3 refine", 1e-3, f64::NAN, true),
        ("prior dr=0    a=1e-3", 1e-3, 0.0, false),
        ("prior dr=0.25 a=1e-3", 1e-3, 0.25, false),
        ("prior dr=-.25 a=1e-3", 1e-3, -0.25, false),
        ("no prior a=5e-4", 5e-4, f64::NAN, false),
        ("no prior a=2e-3", 2e-3, f64::NAN, false),
    ] {
        let t = Instant::now();
        let mut config = ReconConfig::new(alpha);
        if !delta_r.is_nan() {
            config.prior = eit_core::prior::PriorMask::around(support.clone(), delta_r);
        }
        if refine {
            config.params.refine = Some(eit_core::recon::RefineSchedule::default());
        }
        let result = reconstruct(&out.data, &recon_mesh, &sigma0, &config).unwrap();
        let (mean_dg, _) = metrics(&result.delta_gamma, &support).unwrap();
        let (sigma_b, sigma_max) = metrics(&result.sigma, &support).unwrap();
        let d = &result.diagnostics;
        println!("{label}: iters {} term {:?} mean_dg {:.3} sigma_B {:.3} sigma_max {:.3} [{:?}]",
            d.iterations.len(), d.termination, mean_dg, sigma_b, sigma_max, t.elapsed());
    }
}

#[test]
#[ignore]
fn convergence_probes() {
    let fine = Arc::new(generate_disk_mesh(0.0105).unwrap());
    let recon_mesh = Arc::new(generate_disk_mesh(1.0 / 31.0).unwrap());
    let spec = PhantomSpec::circular();
    let sigma_true = spec.rasterize(&fine);
    let out = simulate(&sigma_true, &BoundaryArc::full(), &recon_mesh,
        &SimOptions { noise_level: 0.01, seed: 7, allow_same_mesh: false }).unwrap();
    let sigma0 = Field::constant(recon_mesh.clone(), 1.0);
    let support = Region::Disk { center: [0.4, 0.0], radius: 0.25 };

    for (label, delta_r) in [("dr=0", 0.0), ("dr=0.1", 0.1), ("dr=0.25", 0.25)] {
        let t = Instant::now();
        let mut config = ReconConfig::new(1e-3);
        config.prior = eit_core::prior::PriorMask::around(support.clone(), delta_r);
        config.params.max_iters = 2000;
        let result = reconstruct(&out.data, &recon_mesh, &sigma0, &config).unwrap();
        let (sigma_b, sigma_max) = metrics(&result.sigma, &support).unwrap();
        let d = &result.diagnostics;
        let last = d.iterations.last().unwrap();
        println!("{label}: iters {} term {:?} sigma_B {:.3} sigma_max {:.3} final psi {:.6} disc {:.6} [{:?}]",
            d.iterations.len(), d.termination, sigma_b, sigma_max, last.psi, last.discrepancy, t.elapsed());
    }
}
