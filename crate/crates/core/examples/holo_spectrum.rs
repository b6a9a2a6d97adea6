//! Second-layer decomposition and the 2-D holo-Hilbert spectrum of an AM tone.
//!
//! `cargo run --release --example holo_spectrum`

use std::f64::consts::PI;

use regimekit::emd::emd_decompose;
use regimekit::hhsa::{holo_spectrum, modulation_energies, regime_profile, second_layer, HhsaOptions};
use regimekit::regimes::instantaneous_series;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 1000;
    let (f_am, f_c, depth) = (0.01, 0.2, 0.5);
    let x: Vec<f64> = (0..n)
        .map(|t| {
            let t = t as f64;
            (1.0 + depth * (2.0 * PI * f_am * t).cos()) * (2.0 * PI * f_c * t).cos()
        })
        .collect();

    let opts = HhsaOptions::default();
    let d = emd_decompose(&x, &opts.sift)?;
    let first = instantaneous_series(&d, &opts.sift)?;
    let sl = second_layer(&d, &opts)?;
    for (j, comp) in sl.components.iter().enumerate() {
        println!("IMF{}: {} envelope modes", j + 1, comp.modes.len());
    }
    // modes carrying less than 1e-6 of the energy are sifting residue
    for (j, k, e) in modulation_energies(&sl, 0..n).into_iter().filter(|m| m.2 > 1e-6) {
        println!("  IMF{} mode {}: time-mean squared amplitude {e:.4}", j + 1, k + 1);
    }

    let h = holo_spectrum(&sl, &first, 0..n, opts.bins)?;
    let (i, j, peak) = h.argmax();
    println!(
        "peak cell: am [{:.4}, {:.4}), carrier [{:.4}, {:.4}), energy {peak:.4}",
        h.am_edges[i],
        h.am_edges[i + 1],
        h.c_edges[j],
        h.c_edges[j + 1]
    );
    let p = regime_profile(&h, &sl, &first)?;
    println!("PAME {:.4}, carrier p95 {:.4}, am p95 {:.4}", p.pame, p.wc95, p.wam95);
    println!("total spectrum energy {:.4}", h.total());
    Ok(())
}
