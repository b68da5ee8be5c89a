//! In-process chat-completions stub server with a call counter and a
//! scriptable failure prefix.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::post;
use axum::{Json, Router};

pub struct StubState {
    pub calls: AtomicUsize,
    pub fail_first: usize,
    pub delay: Duration,
    pub reply: String,
}

pub struct Stub {
    pub base_url: String,
    pub state: Arc<StubState>,
}

impl Stub {
    pub fn calls(&self) -> usize {
        self.state.calls.load(Ordering::SeqCst)
    }
}

async fn completions(State(state): State<Arc<StubState>>) -> impl IntoResponse {
    let call_index = state.calls.fetch_add(1, Ordering::SeqCst);
    if call_index < state.fail_first {
        return (StatusCode::TOO_MANY_REQUESTS, "rate limited").into_response();
    }
    if !state.delay.is_zero() {
        tokio::time::sleep(state.delay).await;
    }
    Json(serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": state.reply}}]
    }))
    .into_response()
}

/// Spawns the stub on an ephemeral port and returns its base URL plus the
/// shared state for call counting.
pub async fn spawn(reply: &str, fail_first: usize, delay: Duration) -> Stub {
    let state = Arc::new(StubState {
        calls: AtomicUsize::new(0),
        fail_first,
        delay,
        reply: reply.to_string(),
    });
    let app = Router::new()
        .route("/v1/chat/completions", post(completions))
        .with_state(state.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
        .await
        .expect("bind stub listener");
    let addr = listener.local_addr().expect("stub local addr");
    tokio::spawn(async move {
        axum::serve(listener, app).await.expect("stub server");
    });
    Stub {
        base_url: format!("http://{addr}"),
        state,
    }
}
