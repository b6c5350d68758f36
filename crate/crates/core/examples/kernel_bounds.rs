//! Fits the constants of the six pointwise kernel bounds for a Lax shock of
//! Burgers' equation and an undercompressive shock of the quadratic model.

use nalgebra::DVector;
use shocklab::kernels::{verify_ebounds, EboundsSettings, KernelE, LMode};
use shocklab::models::{burgers, quadratic};
use shocklab::profile::{characteristic_data, solve_profile, ProfileSettings};

fn main() -> shocklab::Result<()> {
    let cases = [
        (burgers(1.0)?, vec![1.0], vec![-1.0]),
        (quadratic(1.0)?, vec![-0.5, 0.0], vec![0.5, 0.0]),
    ];
    for (model, um, up) in cases {
        let set = ProfileSettings { halfwidth: 40.0, h: 0.02, ..Default::default() };
        let profile = solve_profile(&model, &DVector::from_vec(um), &DVector::from_vec(up), &set)?;
        let cd = characteristic_data(&model, &profile)?;
        let kernel = KernelE::from_characteristics(&cd, &profile, LMode::Auto)?;
        let eta = 0.5 * profile.tail_rate();
        let report = verify_ebounds(&kernel, &EboundsSettings { eta, ..Default::default() })?;
        println!("{} ({:?}), eta = {:.4}", model.name(), cd.shock_type(), eta);
        for item in &report.items {
            println!(
                "  [{:>3}] C = {:.4e}  refined {:.4e}  drift {:.2}%  worst (y, t) = ({:.1}, {:.1})  {}",
                item.name,
                item.constant,
                item.constant_refined,
                100.0 * item.drift,
                item.worst.0,
                item.worst.1,
                if item.pass { "ok" } else { "FAIL" }
            );
        }
        println!("  gamma-weighted terms vanish: {}", report.gamma_terms_vanish);
    }
    Ok(())
}
