use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use chorbench_core::llm::{extract_contract, request_generation, ProviderConfig, ProviderStatus, PromptVariant, TestCase};
use tiny_http::{Header, Response, Server};

const KEY_VAR: &str = "CHORBENCH_TEST_PROVIDER_KEY";

/// Starts a mock chat-completions endpoint. Requests numbered below
/// `stall_first` hang past the client timeout; later ones answer.
fn mock(stall_first: usize, status: u16) -> (String, Arc<AtomicUsize>) {
    let server = Server::http("127.0.0.1:0").unwrap();
    let url = format!("http://{}", server.server_addr().to_ip().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            let n = counter.fetch_add(1, Ordering::SeqCst);
            let mut body = String::new();
            let _ = req.as_reader().read_to_string(&mut body);
            let json: serde_json::Value = serde_json::from_str(&body).unwrap();
            assert_eq!(json["temperature"], 0.0);
            assert_eq!(json["messages"][0]["content"], "PROMPT");
            assert_eq!(req.url(), "/chat/completions");
            let auth = req.headers().iter().find(|h| h.field.equiv("Authorization")).map(|h| h.value.to_string());
            assert_eq!(auth.as_deref(), Some("Bearer sk-test"));
            thread::spawn(move || {
                if n < stall_first {
                    thread::sleep(Duration::from_millis(2500));
                }
                let reply = r#"{"choices":[{"message":{"role":"assistant","content":"Sure.\n```solidity\npragma solidity ^0.8.20;\ncontract ChoreographyProcess {}\n```"}}],"usage":{"prompt_tokens":120,"completion_tokens":40,"cost":0.0031}}"#;
                let resp = Response::from_string(reply)
                    .with_status_code(status)
                    .with_header("Content-Type: application/json".parse::<Header>().unwrap());
                let _ = req.respond(resp);
            });
        }
    });
    (url, hits)
}

fn config(url: String) -> ProviderConfig {
    std::env::set_var(KEY_VAR, "sk-test");
    ProviderConfig {
        base_url: url,
        api_key_env_var: KEY_VAR.into(),
        max_retries: 3,
        timeout_secs: 1,
        backoff_base_ms: 10,
        ..ProviderConfig::default()
    }
}

fn case() -> TestCase {
    TestCase { llm_id: "vendor/model-x".into(), prompt_variant: PromptVariant::TwoShot, model_id: "seq_order".into() }
}

#[test]
fn success_on_first_attempt() {
    let (url, hits) = mock(0, 200);
    let e = request_generation("PROMPT", &case(), &config(url));
    assert_eq!(e.provider_status, ProviderStatus::Success);
    assert_eq!(e.attempt, 1);
    assert_eq!((e.prompt_tokens, e.completion_tokens, e.cost_usd), (120, 40, 0.0031));
    assert_eq!(e.full_input, "PROMPT");
    assert_eq!(e.test_case, case());
    assert!(extract_contract(&e.full_output).unwrap().contains("contract ChoreographyProcess"));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn two_timeouts_then_success() {
    let (url, hits) = mock(2, 200);
    let e = request_generation("PROMPT", &case(), &config(url));
    assert_eq!(e.provider_status, ProviderStatus::Success);
    assert_eq!(e.attempt, 3);
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn persistent_server_error_exhausts_retries() {
    let (url, hits) = mock(0, 503);
    let e = request_generation("PROMPT", &case(), &config(url));
    assert_eq!(e.provider_status, ProviderStatus::Error("HTTP 503".into()));
    assert_eq!(e.attempt, 4);
    assert_eq!(e.cost_usd, 0.0);
    assert_eq!(hits.load(Ordering::SeqCst), 4);
}
