use ostb::config::RunConfig;

const TEXT: &str = r#"{
  "device": {"capacitance": 0.0027, "v_out": 2.1},
  "harvest": {"kind": "discrete", "support": [[0.0, 0.5], [0.004, 0.5]]},
  "reward": {"kind": "sigmoid", "beta": 15, "theta": 0.9},
  "sim": {"horizon_seconds": 500, "replications": 4, "seed": 3}
}"#;

fn main() {
    match RunConfig::from_json(TEXT) {
        Ok(cfg) => {
            println!("config hash {}", cfg.hash());
            println!("{}", serde_json::to_string_pretty(&cfg).unwrap());
        }
        Err(e) => eprintln!("rejected: {e}"),
    }
    // typos are caught with their position
    let bad = TEXT.replace("\"v_out\"", "\"vout\"");
    println!("{}", RunConfig::from_json(&bad).unwrap_err());
}
