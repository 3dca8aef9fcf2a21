//! Live session over newline-delimited JSON.
//!
//! Every connection receives all snapshots. Commands from all connections go
//! through one channel to the engine thread, which owns the simulation.
//!
//! Client to server, one object per line:
//!
//! ```text
//! {"key":{"k":"*"}}            "press_next"           "power_loss"
//! {"set_temp_c":{"v":36.6}}    {"set_bpm":{"v":72}}   {"finger":{"on":true}}
//! "pause"   "resume"           {"step":{"ms":100}}
//! {"set_link":{"f_osc":8000000,"baud":9600,"u2x":false}}
//! ```
//!
//! Server to client: a [`Snapshot`] object per line, or
//! `{"error":"...","line":n}` for a rejected command.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keypad::Key;
use crate::sim::scenario::{BPM_RANGE, TEMP_C_RANGE};
use crate::sim::{Action, SensorUpdate, SimConfig, SimError, Simulation, Snapshot};
use crate::uart::{UartConfig, UartError};

pub const DEFAULT_PORT: u16 = 7878;
pub const PORT_ENV: &str = "CHAMBERLINE_PORT";
pub const HEARTBEAT_MS: u64 = 250;
const PACING_MS: u64 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientCommand {
    Key { k: Key },
    PressNext,
    PowerLoss,
    SetTempC { v: f64 },
    SetBpm { v: u32 },
    Finger { on: bool },
    Pause,
    Resume,
    Step { ms: u64 },
    SetLink { f_osc: u32, baud: u32, u2x: bool },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("malformed command: {0}")]
    Malformed(String),
    #[error("temperature {0} outside 0-150 C")]
    Temperature(f64),
    #[error("bpm {0} outside 20-250")]
    Bpm(u32),
    #[error(transparent)]
    Link(#[from] UartError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMessage {
    pub error: String,
    pub line: usize,
}

pub fn parse_command(line: &str) -> Result<ClientCommand, CommandError> {
    serde_json::from_str(line).map_err(|e| CommandError::Malformed(e.to_string()))
}

/// The simulation plus run/pause state; no I/O.
#[derive(Debug, Clone)]
pub struct Session {
    sim: Simulation,
    paused: bool,
}

impl Session {
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        Ok(Self {
            sim: Simulation::new(config)?,
            paused: false,
        })
    }

    pub fn paused(&self) -> bool {
        self.paused
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    pub fn snapshot(&self) -> Snapshot {
        self.sim.snapshot()
    }

    /// Applies `cmd` at the current virtual time.
    pub fn handle(&mut self, cmd: ClientCommand) -> Result<(), CommandError> {
        let now = self.sim.now_ms();
        let sensor = |u: SensorUpdate| Action::Sensor(u);
        match cmd {
            ClientCommand::Key { k } => self.sim.apply(now, Action::Key(k)),
            ClientCommand::PressNext => self.sim.apply(now, Action::Press),
            ClientCommand::PowerLoss => self.sim.apply(now, Action::PowerLoss),
            ClientCommand::SetTempC { v } => {
                if !(v.is_finite() && TEMP_C_RANGE.contains(&v)) {
                    return Err(CommandError::Temperature(v));
                }
                let update = SensorUpdate { temp_c: Some(v), ..Default::default() };
                self.sim.apply(now, sensor(update));
            }
            ClientCommand::SetBpm { v } => {
                if !BPM_RANGE.contains(&v) {
                    return Err(CommandError::Bpm(v));
                }
                let update = SensorUpdate { bpm: Some(v), ..Default::default() };
                self.sim.apply(now, sensor(update));
            }
            ClientCommand::Finger { on } => {
                let update = SensorUpdate { finger: Some(on), ..Default::default() };
                self.sim.apply(now, sensor(update));
            }
            ClientCommand::Pause => self.paused = true,
            ClientCommand::Resume => self.paused = false,
            ClientCommand::Step { ms } => self.sim.advance_to(now + ms),
            ClientCommand::SetLink { f_osc, baud, u2x } => {
                self.sim.set_link(UartConfig::new(f_osc, baud, u2x)?);
            }
        }
        Ok(())
    }

    /// Wall-clock pacing; does nothing while paused.
    pub fn elapse(&mut self, wall_ms: u64) {
        if !self.paused && wall_ms > 0 {
            self.sim.advance_to(self.sim.now_ms() + wall_ms);
        }
    }
}

/// Command for the scenario action `action`.
pub fn command_for(action: Action) -> Vec<ClientCommand> {
    match action {
        Action::Key(k) => vec![ClientCommand::Key { k }],
        Action::Press => vec![ClientCommand::PressNext],
        Action::PowerLoss => vec![ClientCommand::PowerLoss],
        Action::Sensor(u) => {
            let mut out = Vec::new();
            out.extend(u.temp_c.map(|v| ClientCommand::SetTempC { v }));
            out.extend(u.bpm.map(|v| ClientCommand::SetBpm { v }));
            out.extend(u.finger.map(|on| ClientCommand::Finger { on }));
            out
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub sim: SimConfig,
    pub heartbeat_ms: u64,
    pub start_paused: bool,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            heartbeat_ms: HEARTBEAT_MS,
            start_paused: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}

enum Msg {
    Join { id: usize, out: Sender<String> },
    Line { id: usize, line_no: usize, text: String },
    Leave { id: usize },
}

pub struct Server {
    listener: TcpListener,
    session: Session,
    heartbeat: Duration,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, config: ServeConfig) -> Result<Self, ServeError> {
        let mut session = Session::new(&config.sim)?;
        if config.start_paused {
            session.paused = true;
        }
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            session,
            heartbeat: Duration::from_millis(config.heartbeat_ms.max(1)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Serves until the process exits.
    pub fn run(self) -> Result<(), ServeError> {
        let (tx, rx) = mpsc::channel();
        let Server {
            listener,
            session,
            heartbeat,
        } = self;
        thread::spawn(move || engine(session, rx, heartbeat));
        for (id, stream) in listener.incoming().enumerate() {
            let Ok(stream) = stream else { continue };
            let tx = tx.clone();
            thread::spawn(move || {
                let _ = connection(id, stream, tx);
            });
        }
        Ok(())
    }
}

pub fn serve(port: u16, config: ServeConfig) -> Result<(), ServeError> {
    Server::bind(("127.0.0.1", port), config)?.run()
}

fn connection(id: usize, stream: TcpStream, tx: Sender<Msg>) -> io::Result<()> {
    let (out_tx, out_rx) = mpsc::channel::<String>();
    let mut writer = stream.try_clone()?;
    thread::spawn(move || {
        for msg in out_rx {
            if writer
                .write_all(msg.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .is_err()
            {
                break;
            }
        }
    });
    if tx.send(Msg::Join { id, out: out_tx }).is_err() {
        return Ok(());
    }
    for (idx, line) in BufReader::new(stream).lines().enumerate() {
        let text = line?;
        let msg = Msg::Line {
            id,
            line_no: idx + 1,
            text,
        };
        if tx.send(msg).is_err() {
            break;
        }
    }
    let _ = tx.send(Msg::Leave { id });
    Ok(())
}

struct Clients(Vec<(usize, Sender<String>)>);

impl Clients {
    fn broadcast(&mut self, snapshot: &Snapshot) {
        let text = serde_json::to_string(snapshot).expect("snapshot serializes");
        self.0.retain(|(_, out)| out.send(text.clone()).is_ok());
    }

    fn send_to(&mut self, id: usize, text: String) {
        if let Some((_, out)) = self.0.iter().find(|(cid, _)| *cid == id) {
            let _ = out.send(text);
        }
    }
}

fn engine(mut session: Session, rx: Receiver<Msg>, heartbeat: Duration) {
    let mut clients = Clients(Vec::new());
    let mut last_sent = session.snapshot();
    let mut last_push = Instant::now();
    let mut last_pace = Instant::now();
    loop {
        match rx.recv_timeout(Duration::from_millis(PACING_MS)) {
            Ok(Msg::Join { id, out }) => {
                let text = serde_json::to_string(&session.snapshot()).expect("snapshot serializes");
                let _ = out.send(text);
                clients.0.push((id, out));
            }
            Ok(Msg::Leave { id }) => clients.0.retain(|(cid, _)| *cid != id),
            Ok(Msg::Line { id, line_no, text }) => {
                if text.trim().is_empty() {
                    continue;
                }
                match parse_command(&text).and_then(|cmd| session.handle(cmd)) {
                    Ok(()) => {
                        last_sent = session.snapshot();
                        clients.broadcast(&last_sent);
                        last_push = Instant::now();
                    }
                    Err(e) => {
                        let msg = ErrorMessage {
                            error: e.to_string(),
                            line: line_no,
                        };
                        clients.send_to(id, serde_json::to_string(&msg).expect("error serializes"));
                    }
                }
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => return,
        }
        let wall = last_pace.elapsed().as_millis() as u64;
        if wall > 0 {
            last_pace += Duration::from_millis(wall);
            session.elapse(wall);
        }
        let now = session.snapshot();
        if !now.same_state(&last_sent) || last_push.elapsed() >= heartbeat {
            clients.broadcast(&now);
            last_sent = now;
            last_push = Instant::now();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_wire_forms() {
        assert_eq!(parse_command(r#"{"key":{"k":"*"}}"#), Ok(ClientCommand::Key { k: Key::Star }));
        assert_eq!(parse_command(r#""press_next""#), Ok(ClientCommand::PressNext));
        assert_eq!(parse_command(r#"{"press_next":null}"#), Ok(ClientCommand::PressNext));
        assert_eq!(
            parse_command(r#"{"set_link":{"f_osc":1000000,"baud":38400,"u2x":false}}"#),
            Ok(ClientCommand::SetLink { f_osc: 1_000_000, baud: 38400, u2x: false })
        );
        for bad in [r#"{"key":{"k":"E"}}"#, "{", r#""fly""#, r#"{"step":{}}"#] {
            assert!(matches!(parse_command(bad), Err(CommandError::Malformed(_))), "{bad}");
        }
        let round = ClientCommand::Step { ms: 100 };
        assert_eq!(parse_command(&serde_json::to_string(&round).unwrap()), Ok(round));
    }

    #[test]
    fn star_enters_name() {
        let mut s = Session::new(&SimConfig::default()).unwrap();
        s.handle(ClientCommand::Key { k: Key::Star }).unwrap();
        let snap = serde_json::to_value(s.snapshot()).unwrap();
        assert_eq!(snap["booth"]["phase"], "EnterName");
        assert_eq!(snap["booth"]["lcd"][0], "Enter Name:     ");
    }

    #[test]
    fn slow_link_press_shows_link_error() {
        let mut s = Session::new(&SimConfig::default()).unwrap();
        s.handle(ClientCommand::SetLink { f_osc: 1_000_000, baud: 38400, u2x: false })
            .unwrap();
        s.handle(ClientCommand::PressNext).unwrap();
        let snap = s.snapshot();
        assert!(!snap.link.usable);
        assert_eq!(snap.doctor.lcd.row(0), "LINK ERROR      ");
    }

    #[test]
    fn invalid_values_rejected_without_state_change() {
        let mut s = Session::new(&SimConfig::default()).unwrap();
        let before = s.snapshot();
        assert_eq!(s.handle(ClientCommand::SetBpm { v: 300 }), Err(CommandError::Bpm(300)));
        assert!(s.handle(ClientCommand::SetTempC { v: f64::NAN }).is_err());
        assert!(matches!(
            s.handle(ClientCommand::SetLink { f_osc: 1_000_000, baud: 1_000_000, u2x: false }),
            Err(CommandError::Link(_))
        ));
        assert_eq!(s.snapshot(), before);
    }

    #[test]
    fn pause_blocks_pacing_but_not_step() {
        let mut s = Session::new(&SimConfig::default()).unwrap();
        s.handle(ClientCommand::Pause).unwrap();
        s.elapse(500);
        assert_eq!(s.snapshot().t_ms, 0);
        s.handle(ClientCommand::Step { ms: 100 }).unwrap();
        assert_eq!(s.snapshot().t_ms, 100);
        s.handle(ClientCommand::Resume).unwrap();
        s.elapse(50);
        assert_eq!(s.snapshot().t_ms, 150);
    }
}
