//! Runner channels: the subprocess transport and the trait the benchmark
//! loop drives.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command as Process, Stdio};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::wire::Command;
use super::{HarnessError, RunnerSpec};

/// A request/reply transport to a runner.
pub trait RunnerChannel {
    fn send(&mut self, cmd: &Command) -> Result<(), HarnessError>;

    /// Next line from the runner, without its line terminator.
    fn receive(&mut self) -> Result<String, HarnessError>;
}

/// A runner subprocess speaking the wire protocol on stdin/stdout.
///
/// Standard error is drained on a background thread into the log.
pub struct ProcessRunner {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    stderr_pump: Option<JoinHandle<()>>,
}

impl ProcessRunner {
    pub fn launch(spec: &RunnerSpec) -> Result<Self, HarnessError> {
        let (program, args) = spec
            .launch_command
            .split_first()
            .ok_or_else(|| HarnessError::RunnerLaunchFailure("empty launch command".into()))?;
        let mut child = Process::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| HarnessError::RunnerLaunchFailure(format!("{program}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        let stderr = child.stderr.take().expect("stderr is piped");
        let stderr_pump = thread::spawn(move || {
            for line in BufReader::new(stderr).lines() {
                match line {
                    Ok(line) => log::info!(target: "runner", "{line}"),
                    Err(_) => break,
                }
            }
        });
        log::debug!("launched runner pid {}", child.id());
        Ok(Self {
            child,
            stdin,
            stdout,
            stderr_pump: Some(stderr_pump),
        })
    }

    /// Closes stdin and waits up to `grace` for the runner to exit, killing
    /// it afterwards. Returns the exit code if it exited on its own.
    pub fn finish(mut self, grace: Duration) -> Option<i32> {
        self.shutdown(grace)
    }

    fn shutdown(&mut self, grace: Duration) -> Option<i32> {
        drop(self.stdin.take());
        let deadline = Instant::now() + grace;
        let code = loop {
            match self.child.try_wait() {
                Ok(Some(status)) => break status.code(),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => {
                    log::warn!("runner did not exit after quit; killing it");
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    break None;
                }
            }
        };
        if let Some(pump) = self.stderr_pump.take() {
            let _ = pump.join();
        }
        code
    }
}

impl RunnerChannel for ProcessRunner {
    fn send(&mut self, cmd: &Command) -> Result<(), HarnessError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| HarnessError::Io("runner stdin already closed".into()))?;
        let line = cmd.to_line();
        log::debug!("-> {line}");
        writeln!(stdin, "{line}")
            .and_then(|()| stdin.flush())
            .map_err(|e| match e.kind() {
                std::io::ErrorKind::BrokenPipe => HarnessError::RunnerExited,
                _ => HarnessError::Io(format!("writing to runner: {e}")),
            })
    }

    fn receive(&mut self) -> Result<String, HarnessError> {
        let mut line = String::new();
        let read = self
            .stdout
            .read_line(&mut line)
            .map_err(|e| HarnessError::Io(format!("reading from runner: {e}")))?;
        if read == 0 {
            return Err(HarnessError::RunnerExited);
        }
        let line = line.strip_suffix('\n').unwrap_or(&line);
        let line = line.strip_suffix('\r').unwrap_or(line);
        log::debug!("<- {line}");
        Ok(line.to_string())
    }
}

impl Drop for ProcessRunner {
    fn drop(&mut self) {
        if self.stdin.is_some() || self.stderr_pump.is_some() {
            self.shutdown(Duration::from_secs(2));
        }
    }
}
