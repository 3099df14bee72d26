//! Regenerate the shipped preset configuration files.

use std::fs;

use magicsim_core::estimators::{desk_equivalence_system, preset_system, ScenarioName};

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "configs".into());
    fs::create_dir_all(&dir).unwrap();
    for name in ScenarioName::ALL {
        let system = preset_system(name);
        let path = format!("{dir}/{}.json", name.as_str());
        fs::write(&path, system.to_json_string() + "\n").unwrap();
        println!("wrote {path}");
    }
    let desk = desk_equivalence_system();
    let path = format!("{dir}/desk_equivalence.json");
    fs::write(&path, desk.to_json_string() + "\n").unwrap();
    println!("wrote {path}");
}
