use maassgen::*;
use pscatter::maass::{MaassDataset, MaassForm};
use std::f64::consts::PI;

const KEEP: usize = 60;
const SOLVE: usize = 130;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let out = args.get(1).cloned().unwrap_or_else(|| "data/maass_psl2z.json".into());
    let r_max: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(30.0);
    let step: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.005);
    let mut forms = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let brackets = scan(8.0, r_max, step, parity);
        eprintln!("{parity:?}: {} brackets", brackets.len());
        for (lo, hi) in brackets {
            let Some(r) = refine(lo, hi, parity, 1e-12) else { continue };
            let y = (r + 30.0) / (2.0 * PI * SOLVE as f64);
            let Some(a) = solve_coefficients(r, parity, y, SOLVE, SOLVE + 16) else {
                eprintln!("  r = {r}: final solve failed");
                continue;
            };
            let defect = hecke_defect(&a, KEEP);
            if defect > 1e-6 {
                eprintln!("  r = {r}: rejected, Hecke defect {defect:.1e}");
                continue;
            }
            let coeffs = a[..KEEP].to_vec();
            let norm = scaled_norm_sq(r, parity, &coeffs).sqrt();
            let normalization = (0.5 * PI * r).exp() / norm;
            eprintln!("  r = {r:.10} defect {defect:.1e} factor {normalization:.6e}");
            forms.push(MaassForm { r, parity, coeffs, normalization });
        }
    }
    forms.sort_by(|a, b| a.r.total_cmp(&b.r));
    let ds = MaassDataset::new(format!("maassgen: collocation with a_1 = 1, r <= {r_max}, scan step {step}"), forms);
    ds.validate(KEEP).expect("generated dataset is valid");
    ds.save(std::path::Path::new(&out)).expect("write dataset");
    eprintln!("{} forms written to {out}", ds.forms.len());
}
