//! Stdio and TCP transports for the episode protocol. Each connection owns
//! one session; all sessions share the same immutable world.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use crate::protocol::{Flow, Session};
use crate::world::World;

/// Serves one session over any line-oriented reader and writer until EOF or
/// a close request. Invalid UTF-8 is answered with a parse error.
pub fn serve_stream<R: BufRead, W: Write>(world: Arc<World>, mut reader: R, mut writer: W) -> io::Result<()> {
    let mut session = Session::new(world);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        let line = String::from_utf8_lossy(&buf);
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (response, flow) = session.handle_line(line);
        writer.write_all(response.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if flow == Flow::Close {
            return Ok(());
        }
    }
}

pub fn serve_stdio(world: Arc<World>) -> io::Result<()> {
    let stdin = io::stdin();
    let stdout = io::stdout();
    serve_stream(world, stdin.lock(), stdout.lock())
}

fn serve_connection(world: Arc<World>, stream: TcpStream) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let reader = BufReader::new(stream.try_clone()?);
    serve_stream(world, reader, stream)
}

/// Accepts connections forever, one thread per connection. A failing
/// connection never takes the listener down.
pub fn serve_tcp(world: Arc<World>, listener: TcpListener) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(_) => continue,
        };
        let world = Arc::clone(&world);
        thread::spawn(move || {
            let _ = serve_connection(world, stream);
        });
    }
    Ok(())
}
