//! Maps from JSON specs and the single-map reports the CLI prints.
//!
//! cargo run --release --example map_specs

use conformal_rigidity::experiments::{center_report, deficit_report, fit_report, SingleOptions};
use conformal_rigidity::field::parse_map_spec;

const SPECS: &[&str] = &[
    r#"{"family": "mobius", "R": [[1,0,0],[0,1,0],[0,0,1]], "xi": [0,0,1], "lambda": 0.5}"#,
    r#"{"family": "normalized_linear", "matrix": [[1.2,0,0],[0,1,0],[0,0,1]]}"#,
    r#"{"family": "compose", "inner": {"R": [[1,0,0],[0,1,0],[0,0,1]], "xi": [1,0,0], "lambda": 2},
        "outer": {"family": "normalized_linear", "diag": [1.1, 1, 1]}}"#,
    r#"{"family": "bump", "eps": 0.05}"#,
];

fn main() -> conformal_rigidity::error::Result<()> {
    let opts = SingleOptions::default();
    for text in SPECS {
        let field = parse_map_spec(text, Some(3))?;
        let d = deficit_report(&field, &opts)?;
        println!("{}", serde_json::to_string(&d).unwrap());
        {
            let f = fit_report(&field, &opts)?;
            println!("  fit objective {:.6e}", f.objective);
        }
        if text.contains("compose") {
            let c = center_report(&field, &opts)?;
            println!("  centered: residual {:.1e}, deficit {:.10e} -> {:.10e}", c.residual, c.deficit_before, c.deficit_after);
        }
    }
    match parse_map_spec(r#"{"params": {}}"#, Some(3)) {
        Err(e) => println!("missing family: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
