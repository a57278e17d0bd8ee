#![allow(dead_code)]

use std::net::SocketAddr;

use stt_cli::{serve, AppState};
use stt_core::RewardConfig;
use tokio::net::TcpListener;

/// Starts the service on an ephemeral port for the rest of the test.
pub async fn spawn_server(reward: RewardConfig, batch_cap: usize) -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let state = AppState::new(reward, batch_cap);
    tokio::spawn(serve(listener, state, std::future::pending()));
    addr
}

pub async fn post(client: &reqwest::Client, addr: SocketAddr, path: &str, body: Vec<u8>) -> (u16, Vec<u8>) {
    let resp = client
        .post(format!("http://{addr}{path}"))
        .header("content-type", "application/json")
        .body(body)
        .send()
        .await
        .unwrap();
    let status = resp.status().as_u16();
    (status, resp.bytes().await.unwrap().to_vec())
}

pub async fn get(client: &reqwest::Client, addr: SocketAddr, path: &str) -> (u16, Vec<u8>) {
    let resp = client.get(format!("http://{addr}{path}")).send().await.unwrap();
    let status = resp.status().as_u16();
    (status, resp.bytes().await.unwrap().to_vec())
}
