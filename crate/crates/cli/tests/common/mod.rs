//! Mock chat-completions provider shared by the runner tests.
#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use serde_json::json;
use tiny_http::{Header, Response, Server};

pub const KEY_VAR: &str = "CHORBENCH_MOCK_PROVIDER_KEY";

pub struct MockProvider {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
    server: Arc<Server>,
}

impl MockProvider {
    /// Answers with `respond(prompt)`. The first `fail_first` requests get
    /// HTTP 503.
    pub fn start(fail_first: usize, respond: impl Fn(&str) -> String + Send + Sync + 'static) -> Self {
        std::env::set_var(KEY_VAR, "sk-mock");
        let server = Arc::new(Server::http("127.0.0.1:0").unwrap());
        let url = format!("http://{}", server.server_addr().to_ip().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let (srv, counter) = (server.clone(), hits.clone());
        let respond = Arc::new(respond);
        thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let n = counter.fetch_add(1, Ordering::SeqCst);
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                if n < fail_first {
                    let _ = req.respond(Response::from_string("upstream outage").with_status_code(503));
                    continue;
                }
                let prompt = serde_json::from_str::<serde_json::Value>(&body).unwrap()["messages"][0]["content"]
                    .as_str()
                    .unwrap_or_default()
                    .to_string();
                let content = respond(&prompt);
                let prompt_tokens = prompt.len() / 4;
                let completion_tokens = content.len() / 4;
                let reply = json!({
                    "choices": [{ "message": { "role": "assistant", "content": content } }],
                    "usage": {
                        "prompt_tokens": prompt_tokens,
                        "completion_tokens": completion_tokens,
                        "cost": (prompt_tokens + 3 * completion_tokens) as f64 * 1e-6,
                    }
                });
                let resp = Response::from_string(reply.to_string())
                    .with_header("Content-Type: application/json".parse::<Header>().unwrap());
                let _ = req.respond(resp);
            }
        });
        Self { url, hits, server }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

impl Drop for MockProvider {
    fn drop(&mut self) {
        self.server.unblock();
    }
}

/// Id of the model the prompt asks about (the last choreography in it).
pub fn target_model_id(prompt: &str) -> String {
    let start = prompt.rfind("<choreography id=\"").expect("prompt embeds a model") + "<choreography id=\"".len();
    let end = prompt[start..].find('"').unwrap();
    prompt[start..start + end].to_string()
}
