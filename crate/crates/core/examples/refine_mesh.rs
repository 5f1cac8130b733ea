//! Random marking rounds with newest-vertex bisection and with the graded
//! variant; prints mesh statistics and writes both meshes as SVG.
//!
//! cargo run --release --example refine_mesh [-- out_dir]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eigenadapt::cli::write_mesh_svg;
use eigenadapt::geometry::{builtin_domain, initial_mesh};
use eigenadapt::mesh::{refine, MarkSet, Strategy};

fn main() -> eigenadapt::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out".into()));
    std::fs::create_dir_all(&out)?;
    let initial = initial_mesh(&builtin_domain("omega1")?, 4)?;
    for strategy in [Strategy::Nvb, Strategy::BisecLg1] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut mesh = initial.clone();
        for _ in 0..200 {
            // bias towards the re-entrant corner at (0.5, 0.5)
            let t = (0..8)
                .map(|_| rng.gen_range(0..mesh.n_elements()))
                .min_by(|&a, &b| {
                    let d = |t: usize| {
                        let c = mesh.centroid(t);
                        (c[0] - 0.5).hypot(c[1] - 0.5)
                    };
                    d(a).total_cmp(&d(b))
                })
                .expect("eight candidates");
            mesh = refine(&mesh, &MarkSet::new(vec![t]), strategy)?;
        }
        let s = mesh.stats();
        println!(
            "{strategy}: {} elements, h in [{:.2e}, {:.2e}], min angle {:.1} deg, generation diff edge {} vertex {}",
            s.n_elements,
            s.h_min,
            s.h_max,
            s.min_angle.to_degrees(),
            s.max_adjacent_gen_diff,
            s.max_vertex_gen_diff
        );
        let path = out.join(format!("refine_{strategy}.svg"));
        write_mesh_svg(&mesh, &path)?;
        println!("  wrote {}", path.display());
    }
    Ok(())
}
