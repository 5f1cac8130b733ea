use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eigenadapt::geometry::{builtin_domain, initial_mesh, BUILTIN_DOMAINS};
use eigenadapt::mesh::{read_mesh, refine, write_mesh, MarkSet, Strategy};

#[test]
fn refined_meshes_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for id in BUILTIN_DOMAINS {
        let mut mesh = initial_mesh(&builtin_domain(id).unwrap(), 4).unwrap();
        for _ in 0..15 {
            let marks = (0..4).map(|_| rng.gen_range(0..mesh.n_elements())).collect();
            mesh = refine(&mesh, &MarkSet::new(marks), Strategy::BisecLg1).unwrap();
        }
        let text = write_mesh(&mesh);
        let back = read_mesh(&text).unwrap();
        assert_eq!(back.coords(), mesh.coords(), "{id}");
        assert_eq!(back.triangles(), mesh.triangles());
        assert_eq!(back.generations(), mesh.generations());
        assert_eq!(back.dirichlet(), mesh.dirichlet());
        back.check_conformity().unwrap();
        assert_eq!(write_mesh(&back), text);

        // a reloaded mesh keeps refining conformingly
        let again = refine(&back, &MarkSet::new(vec![0]), Strategy::Nvb).unwrap();
        again.check_conformity().unwrap();
    }
}

#[test]
fn malformed_files_report_the_line() {
    let mesh = initial_mesh(&builtin_domain("unit_square").unwrap(), 2).unwrap();
    let text = write_mesh(&mesh);
    let broken = text.replacen("triangles", "triangle", 1);
    assert!(read_mesh(&broken).unwrap_err().to_string().contains("line 2"));
    let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    assert!(read_mesh(&truncated).is_err());
}
