//! Record/replay mechanics of the LLM gateway: schema validation with a
//! repair re-prompt, content-addressed fixture keys, and byte-identical
//! replay — demonstrated with a scripted in-process provider, so it runs
//! without network access.
//!
//! ```bash
//! cargo run -p strategist --example record_replay
//! ```

use std::sync::{Arc, Mutex};

use strategist::llm::{
    ChatProvider, ChatRequest, FixtureStore, Gateway, GatewayError, PromptExchange, SchemaName,
};

/// Plays a fixed list of replies; the first one is deliberately malformed
/// to trigger a repair re-prompt.
struct ScriptedProvider {
    replies: Mutex<Vec<String>>,
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, GatewayError> {
        println!(
            "-> provider called (user prompt {} chars)",
            request.user.len()
        );
        let mut replies = self.replies.lock().unwrap();
        if replies.is_empty() {
            return Err(GatewayError::Transport("script exhausted".into()));
        }
        Ok(replies.remove(0))
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let provider = Arc::new(ScriptedProvider {
        replies: Mutex::new(vec![
            "Sure! Here are some keywords you could use.".to_string(), // fails validation
            r#"{"keywords":["metformin","dimethylbiguanide","glucophage"]}"#.to_string(),
        ]),
    });

    let exchange = PromptExchange::new(
        "You expand one search concept into query keywords.",
        "Concept: metformin (role: intervention)",
        SchemaName::Keywords,
    )?;

    // record: the invalid reply triggers one repair re-prompt, then the
    // valid reply is persisted under the exchange digest
    let recorder = Gateway::record(provider, FixtureStore::new(dir.path()), "demo-model");
    let digest = recorder.digest_of(&exchange);
    let recorded = recorder.complete_structured(&exchange)?;
    println!("recorded after {} attempt(s)", recorded.attempts);
    println!("fixture key: {digest}");
    println!(
        "fixture file: {}",
        dir.path().join(format!("{digest}.json")).display()
    );

    // replay: no provider, byte-identical raw text
    let replayer = Gateway::replay(FixtureStore::new(dir.path()), "demo-model");
    let replayed = replayer.complete_structured(&exchange)?;
    println!("\nreplayed in {} attempt(s)", replayed.attempts);
    println!("byte-identical: {}", replayed.raw_text == recorded.raw_text);
    println!("parsed value: {}", replayed.parsed);
    Ok(())
}
