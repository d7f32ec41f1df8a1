//! Bill of materials, cost, time and assembly order for a 3×3×3 blue lattice
//! with a made-up printed volume.

use zomefab::geometry::Vec3;
use zomefab::report::{assembly_guide, build_report, CostModel};
use zomefab::zome_opt::ZomeStructure;

fn main() {
    let z = ZomeStructure::cube_lattice(47.3, Vec3::zeros(), 3);
    let r = build_report(&z, vec![(0, 1.5e5), (1, 1.5e5)], None, &CostModel::default());
    print!("{}", r.bom.to_csv());
    let c = &r.cost;
    println!("zometool {:.2} USD (struts {:.2}, balls {:.2})", c.zome_usd, c.strut_usd, c.ball_usd);
    println!("filament {:.1} m -> {:.2} USD; total {:.2} USD", c.filament_m, c.print_usd, c.total_usd);
    let t = &r.time;
    println!("print {:.1} h, assembly {:.2} h, overall {:.1} h", t.print_hours, t.assembly_hours, t.overall_hours);
    println!();
    let guide = assembly_guide(&z, None);
    print!("{}", guide.to_text().lines().take(8).collect::<Vec<_>>().join("\n"));
    println!("\n... {} balls in order", guide.entries.len());
}
