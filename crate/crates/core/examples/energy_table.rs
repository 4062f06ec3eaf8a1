//! Rebuilds the draw and yield columns of the reference table from the
//! fitted affine power model.

use framedrop::energy::reference::{series, Mode, TrackerFamily, BASELINE_TARGETS};
use framedrop::energy::{compute_yield, fit_profile, FitMethod, ModelId, YieldInput};

fn main() -> framedrop::Result<()> {
    for tracker in [TrackerFamily::CasTrack, TrackerFamily::DeepFusionMot] {
        for model in ModelId::ALL {
            let s = series(tracker, Mode::Baseline, model);
            let obs = s.draw_observations();
            let fit = fit_profile(model, &obs, FitMethod::LeastSquares)?;
            println!(
                "{} / {model}: draw = {:.1} W + {:.1} W x target (max residual {:.1} W)",
                tracker.name(),
                fit.intercept,
                fit.slope,
                fit.max_abs_residual()
            );
            for (k, (n, m)) in BASELINE_TARGETS.iter().enumerate() {
                let t = s.effective_target[k].unwrap() / 100.0;
                let y = (k > 0).then(|| {
                    compute_yield(YieldInput {
                        draw_100: s.draw_w[0].unwrap(),
                        hota_100: s.hota[0].unwrap(),
                        draw_target: s.draw_w[k].unwrap(),
                        hota_target: s.hota[k].unwrap(),
                    })
                });
                println!(
                    "  {n}/{m:<2} draw {:6.1} W (model {:6.1})  yield {:>6}  (table {:>6})",
                    s.draw_w[k].unwrap(),
                    fit.profile.draw_at(t, true),
                    y.and_then(|r| r.ok()).map_or("-".into(), |v| format!("{v:.2}")),
                    s.yield_w[k].map_or("-".into(), |v| format!("{v:.2}")),
                );
            }
        }
    }
    Ok(())
}
