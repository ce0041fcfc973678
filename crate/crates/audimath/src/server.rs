//! TCP service: one session per connection, one thread per connection.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;

use thiserror::Error;

use crate::config::EngineConfig;
use crate::files::FileStore;
use crate::protocol::Connection;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot listen on {addr}: {source}")]
    BindError { addr: String, source: io::Error },
}

pub struct Server {
    listener: TcpListener,
    config: Arc<EngineConfig>,
    documents: Option<PathBuf>,
}

/// Bind without accepting yet.
pub fn serve(addr: impl ToSocketAddrs + ToString, config: EngineConfig) -> Result<Server, ServeError> {
    let listener = TcpListener::bind(&addr).map_err(|source| ServeError::BindError {
        addr: addr.to_string(),
        source,
    })?;
    Ok(Server {
        listener,
        config: Arc::new(config),
        documents: None,
    })
}

impl Server {
    /// Directory that relative save/load paths resolve against.
    pub fn with_documents(mut self, dir: impl Into<PathBuf>) -> Server {
        self.documents = Some(dir.into());
        self
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accept connections forever.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("audimath: accept failed: {e}");
                    continue;
                }
            };
            let config = Arc::clone(&self.config);
            let store = FileStore {
                base: self.documents.clone(),
            };
            thread::spawn(move || {
                if let Err(e) = handle_client(stream, &config, store) {
                    eprintln!("audimath: connection closed: {e}");
                }
            });
        }
        Ok(())
    }

    pub fn spawn(self) -> thread::JoinHandle<io::Result<()>> {
        thread::spawn(move || self.run())
    }
}

fn handle_client(stream: TcpStream, config: &EngineConfig, store: FileStore) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    let mut conn = Connection::new(config.session(), store);
    for line in reader.lines() {
        if let Some(msg) = conn.handle_line(&line?) {
            let mut line = msg.to_line();
            line.push('\n');
            writer.write_all(line.as_bytes())?;
            writer.flush()?;
        }
    }
    Ok(())
}
