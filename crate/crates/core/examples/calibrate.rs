//! Fits an energy profile to measured (target, watts) pairs with both fit
//! methods and writes the least-squares profile as JSON.
//!
//! cargo run --example calibrate -- [observations.csv] [out.json]

use std::path::PathBuf;

use framedrop::energy::{fit_profile, FitMethod, ModelId};
use framedrop::experiment::{cmd_calibrate, format_fit, read_observations};

fn main() -> framedrop::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = std::env::temp_dir().join("framedrop-calibrate");
    std::fs::create_dir_all(&dir).expect("temp dir is writable");
    let obs_path = match args.next() {
        Some(p) => PathBuf::from(p),
        None => {
            let p = dir.join("observations.csv");
            std::fs::write(
                &p,
                "effective_target,watts\n1.0,470.4\n0.5,367.2\n0.33,326.3\n0.2,297.8\n0.1,276.4\n",
            )
            .expect("write observations");
            p
        }
    };
    let out = args.next().map_or_else(|| dir.join("profile.json"), PathBuf::from);

    let obs = read_observations(&obs_path)?;
    let minimax = fit_profile(ModelId::PvRcnn, &obs, FitMethod::Minimax)?;
    print!("{}", format_fit(&minimax, &obs));
    let fit = cmd_calibrate(&obs_path, ModelId::PvRcnn, FitMethod::LeastSquares, &out)?;
    print!("{}", format_fit(&fit, &obs));
    println!("wrote {}", out.display());
    Ok(())
}
