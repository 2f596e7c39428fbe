#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use guidebot::msgbus::Bus;
use guidebot::navcore::Cell;
use guidebot::simrobot::{Session, SimConfig, SimStart};
use guidebot_gateway::config::load_inputs;
use guidebot_gateway::service::{bind, serve, LiveSession};
use tokio::sync::oneshot;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn start() -> SimStart {
    SimStart {
        floor_id: "1".into(),
        cell: Cell::new(2, 2),
        heading_rad: 0.0,
    }
}

/// A live session with its service bound to an ephemeral port.
pub struct TestServer {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl TestServer {
    pub fn start(tick_ms: u64) -> Self {
        let inputs = load_inputs(&data("site_two_floor.json"), &data("lexicon.json"), None).unwrap();
        let mut cfg = SimConfig::new(start());
        cfg.tick_ms = tick_ms;
        let session = Session::new(
            Bus::new(),
            Arc::new(inputs.site),
            inputs.lexicon.lexicon,
            inputs.lexicon.wake,
            cfg,
        )
        .unwrap();
        let (addr_tx, addr_rx) = std::sync::mpsc::channel();
        let (stop_tx, stop_rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            let (listener, addr) = rt.block_on(bind("127.0.0.1:0")).unwrap();
            let live = LiveSession::start(session);
            addr_tx.send(addr).unwrap();
            rt.block_on(serve(listener, live.hub(), async {
                let _ = stop_rx.await;
            }))
            .unwrap();
            live.stop();
        });
        Self {
            addr: addr_rx.recv().unwrap(),
            stop: Some(stop_tx),
            thread: Some(thread),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
