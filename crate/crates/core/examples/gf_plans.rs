//! Prints the coding order of a 17-frame clip under each configuration.
//!
//! cargo run --example gf_plans

use texlab::codec::{coding_sequence, plan_gf_groups, CodingConfig, GF_INTERVAL};

fn main() -> texlab::error::Result<()> {
    for config in CodingConfig::ALL {
        let interval = if config == CodingConfig::TexAll { 4 } else { GF_INTERVAL };
        println!("{config} (interval {interval}):");
        for e in coding_sequence(&plan_gf_groups(17, config, interval)?) {
            let texture = if e.texture_enabled {
                format!("texture from {:?}", e.texture_refs)
            } else {
                String::new()
            };
            println!(
                "  #{:<2} frame {:<2} {:<7} layer {} refs {:<8} {texture}",
                e.coding_order,
                e.display_index,
                format!("{:?}", e.kind),
                e.layer,
                format!("{:?}", e.refs)
            );
        }
    }
    Ok(())
}
