//! Closest-point projection and lift quantities on the built-in surfaces.
//!
//! For a few points near each surface this prints the closest point `ξ`, the signed
//! distance, the principal curvatures there, and the area Jacobian `δ_h` of the lift
//! seen from a plane tilted slightly away from the tangent plane.
//!
//! ```text
//! cargo run --example closest_point
//! ```

use surfdg::geometry::LevelSetSurface;
use surfdg::Vec3;

fn main() -> surfdg::Result<()> {
    let surfaces = [
        ("sphere", LevelSetSurface::sphere()),
        ("dziuk", LevelSetSurface::dziuk()),
        ("enzensberger-stern", LevelSetSurface::enzensberger_stern()),
    ];
    let points = [Vec3::new(0.9, 0.3, 0.2), Vec3::new(-0.2, 1.1, 0.4), Vec3::new(0.1, -0.3, -0.7)];
    for (name, surface) in &surfaces {
        println!("{name}");
        for x in &points {
            let projection = surface.project(x)?;
            let (k1, k2) = projection.principal_curvatures();
            let tilted = (projection.nu + Vec3::new(0.05, -0.03, 0.02)).normalize();
            let lift = projection.lift(&tilted)?;
            println!(
                "  x = {:>6.3?}  xi = {:>7.4?}  d = {:+.5}  curvatures ({k1:+.3}, {k2:+.3})  delta_h = {:.5}",
                x.as_slice(),
                projection.xi.as_slice(),
                projection.d,
                lift.delta_h
            );
            // the closest point of a surface point is itself
            let (again, d) = surface.closest_point(&projection.xi)?;
            assert!((again - projection.xi).norm() < 1e-10 && d.abs() < 1e-10);
        }
    }
    Ok(())
}
