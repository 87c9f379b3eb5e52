//! Mesh handling: load a bundled OFF mesh, refine it locally and uniformly, validate and
//! export the results as OFF and VTK.
//!
//! ```text
//! cargo run --example mesh_refinement [output-dir]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use surfdg::mesh::{bisect, refine_uniform, write_off, write_vtk_file};
use surfdg::problems::dziuk_problem;
use surfdg::Vec3;

fn main() -> surfdg::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("surfdg-mesh"));
    std::fs::create_dir_all(&dir)?;

    let problem = dziuk_problem();
    let surface = &problem.surface;
    let mut mesh = problem.initial_mesh()?;
    println!("bundled mesh: {} triangles, h_max {:.3}", mesh.n_triangles(), mesh.h_max());

    // three rounds of bisection around the point where the solution peaks
    let peak = Vec3::new(-1.0, 0.0, 0.0);
    for round in 1..=3 {
        let marked: Vec<usize> =
            (0..mesh.n_triangles()).filter(|&t| (mesh.barycenter(t) - peak).norm() < 0.6).collect();
        let refinement = bisect(&mesh, &marked, surface)?;
        refinement.mesh.validate(surface)?;
        println!(
            "bisection round {round}: {} marked, {} -> {} triangles",
            marked.len(),
            mesh.n_triangles(),
            refinement.mesh.n_triangles()
        );
        mesh = refinement.mesh;
    }

    let uniform = refine_uniform(&mesh, surface)?;
    uniform.mesh.validate(surface)?;
    println!("regular refinement: {} triangles, h_max {:.3}", uniform.mesh.n_triangles(), uniform.mesh.h_max());

    let generation: Vec<f64> = mesh.triangles().iter().map(|t| f64::from(t.generation)).collect();
    let area: Vec<f64> = (0..mesh.n_triangles()).map(|t| mesh.area(t)).collect();
    write_vtk_file(dir.join("local.vtk"), &mesh, "locally refined", &[("generation", &generation), ("area", &area)])?;
    write_off(&uniform.mesh, BufWriter::new(File::create(dir.join("uniform.off"))?))?;
    println!("wrote {}", dir.display());
    Ok(())
}
