//! Programs the specializer rejects, with the message and exit class each
//! produces.

use simpl::algorithms::custom_program;
use simpl::model::load_model;
use simpl::pe::{specialize, PeOptions};

const CASES: [(&str, &str); 4] = [
    ("static over a loop variable", "(for ([i 10])\n  (print (static (+ i 1))))"),
    (
        "recursion on a run-time value",
        "(define (count-down k)\n  (if (= k 0) 0 (+ 1 (count-down (- k 1)))))\n(count-down (random-integer 10))",
    ),
    (
        "inlining refused",
        "(define (count-down k)\n  #:no-inline-when-symbolic (k)\n  (if (= k 0) 0 (+ 1 (count-down (- k 1)))))\n(count-down (random-integer 10))",
    ),
    ("type error", "(+ 1 (flip 0.5))"),
];

fn main() -> simpl::Result<()> {
    let (_, net) = load_model("burglary")?;
    for (what, src) in CASES {
        let result = custom_program(src, &net).and_then(|p| specialize(&p, &net, PeOptions::default()));
        match result {
            Ok(_) => println!("{what}: accepted"),
            Err(e) => {
                let msg = e.to_string();
                let short = if msg.len() > 160 { format!("{}...", &msg[..160]) } else { msg };
                println!("{what}: [{} / exit {}] {short}", e.class().as_str(), e.class().exit_code());
            }
        }
    }
    Ok(())
}
