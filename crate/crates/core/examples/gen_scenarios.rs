// regenerate the shipped example scenario files
use termstruct::sim_lab::presets;

fn main() {
    let dir = std::path::Path::new("scenarios");
    std::fs::create_dir_all(dir).unwrap();
    for (name, sc) in [
        ("minimal_deterministic", presets::minimal_deterministic()),
        ("classical_hjm", presets::classical_hjm(0.01, 1.0, 0.01)),
        ("zero_recovery_mc", presets::zero_recovery_mc()),
        ("single_risky_date", presets::single_risky_date()),
        ("general_recovery_mc", presets::general_recovery_mc()),
        ("jump_rich", presets::jump_rich()),
        ("singular_conditions", presets::singular_conditions()),
        ("two_period_tree", presets::two_period_constructed()),
    ] {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&sc).unwrap()).unwrap();
        println!("wrote {}", path.display());
    }
}
