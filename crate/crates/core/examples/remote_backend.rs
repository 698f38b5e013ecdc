//! One completion against an OpenAI-compatible endpoint.
//!
//! ```text
//! NMOB_ENDPOINT=http://127.0.0.1:8000/v1/chat/completions NMOB_MODEL=local-model \
//!     cargo run --example remote_backend
//! ```
//!
//! The key, if the server needs one, is read from `NMOB_API_KEY`.

use narrative_mobility::backend::{complete, BackendKind, GenerationParams};

fn main() {
    let Ok(endpoint) = std::env::var("NMOB_ENDPOINT") else {
        eprintln!("set NMOB_ENDPOINT (and optionally NMOB_MODEL, NMOB_API_KEY) to try a live backend");
        return;
    };
    let kind = BackendKind::Remote {
        endpoint,
        model: std::env::var("NMOB_MODEL").unwrap_or_else(|_| "local-model".into()),
        api_key_env: "NMOB_API_KEY".into(),
        max_in_flight: 1,
    };
    let params = GenerationParams { max_retries: 1, ..GenerationParams::default() };
    match complete(
        &kind,
        "You answer in one short sentence.",
        "How do most people get to work in a large city?",
        &params,
    ) {
        Ok(text) => println!("{text}"),
        Err(e) => eprintln!("request failed: {e}"),
    }
}
