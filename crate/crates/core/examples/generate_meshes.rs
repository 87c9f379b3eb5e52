//! Regenerates the coarse meshes bundled in `data/`.
//!
//! The Dziuk mesh is an icosphere carried onto the surface by an exact map; the
//! Enzensberger-Stern mesh pushes icosphere directions radially onto the surface, so the
//! thin arms of that surface are resolved by only a handful of stretched triangles.
//!
//! ```text
//! cargo run --example generate_meshes [output-dir]
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use surfdg::geometry::LevelSetSurface;
use surfdg::mesh::{dziuk_mesh, star_shaped_mesh, write_off, SurfaceMesh};

fn save(dir: &Path, name: &str, mesh: &SurfaceMesh, surface: &LevelSetSurface) -> surfdg::Result<()> {
    mesh.validate(surface)?;
    let path = dir.join(name);
    write_off(mesh, BufWriter::new(File::create(&path)?))?;
    println!("{}: {} vertices, {} triangles, h_max {:.3}", path.display(), mesh.n_vertices(), mesh.n_triangles(), mesh.h_max());
    Ok(())
}

fn main() -> surfdg::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&dir)?;

    let dziuk = LevelSetSurface::dziuk();
    save(&dir, "dziuk.off", &dziuk_mesh(1), &dziuk)?;

    let es = LevelSetSurface::enzensberger_stern();
    save(&dir, "enzensberger_stern.off", &star_shaped_mesh(&es, 2)?, &es)?;
    Ok(())
}
