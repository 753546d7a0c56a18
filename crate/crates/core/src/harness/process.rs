//! One child process per run: its own process group, CPU and address-space
//! rlimits, optional core pinning, and CPU/RSS accounting summed over every
//! live process of the group.

use std::fs::File;
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

const POLL: Duration = Duration::from_millis(10);

static ABORT: AtomicBool = AtomicBool::new(false);

/// Asks every running and future [`run_limited`] call to kill its process
/// group and return [`Termination::Aborted`].
pub fn request_abort() {
    ABORT.store(true, Ordering::SeqCst);
}

pub fn abort_requested() -> bool {
    ABORT.load(Ordering::SeqCst)
}

extern "C" fn on_signal(_: libc::c_int) {
    ABORT.store(true, Ordering::SeqCst);
}

/// Turns SIGINT and SIGTERM into [`request_abort`]. Runs live in their own
/// process groups, so a terminal interrupt does not reach them directly.
pub fn abort_on_signals() {
    for sig in [libc::SIGINT, libc::SIGTERM] {
        // SAFETY: the handler only stores to an atomic, which is async-signal-safe.
        unsafe {
            let mut sa: libc::sigaction = std::mem::zeroed();
            sa.sa_sigaction = on_signal as extern "C" fn(libc::c_int) as usize;
            libc::sigemptyset(&mut sa.sa_mask);
            libc::sigaction(sig, &sa, std::ptr::null_mut());
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProcLimits {
    pub cpu_s: f64,
    pub mem_mb: u64,
    /// Cores the run is pinned to; empty means no pinning.
    pub cores: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Exited(i32),
    Signaled(i32),
    CpuLimit,
    WallLimit,
    MemLimit,
    /// Killed because the suite was aborted.
    Aborted,
}

#[derive(Debug, Clone)]
pub struct ProcOutcome {
    pub termination: Termination,
    pub cpu_time_s: f64,
    pub wall_time_s: f64,
    pub mem_peak_mb: f64,
    pub stdout: String,
    pub stderr: String,
}

impl ProcOutcome {
    /// Whether the run died of an allocation failure under the address-space limit.
    pub fn allocation_failed(&self) -> bool {
        let abnormal = !matches!(self.termination, Termination::Exited(0));
        abnormal
            && ["memory allocation of", "out of memory", "Cannot allocate memory", "bad_alloc", "MemoryError"]
                .iter()
                .any(|m| self.stderr.contains(m))
    }
}

fn ticks_per_second() -> f64 {
    // SAFETY: sysconf has no preconditions.
    let t = unsafe { libc::sysconf(libc::_SC_CLK_TCK) };
    if t > 0 {
        t as f64
    } else {
        100.0
    }
}

fn page_mb() -> f64 {
    // SAFETY: sysconf has no preconditions.
    let p = unsafe { libc::sysconf(libc::_SC_PAGESIZE) };
    (if p > 0 { p as f64 } else { 4096.0 }) / (1024.0 * 1024.0)
}

/// CPU ticks (own plus reaped children) and resident pages over the group.
fn group_usage(pgid: i32) -> (u64, u64) {
    let Ok(dir) = std::fs::read_dir("/proc") else { return (0, 0) };
    let mut ticks = 0;
    let mut pages = 0;
    for entry in dir.flatten() {
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if !name.bytes().all(|b| b.is_ascii_digit()) {
            continue;
        }
        let Ok(stat) = std::fs::read_to_string(format!("/proc/{name}/stat")) else { continue };
        // The command name may contain spaces; fields resume after the last ')'.
        let Some(close) = stat.rfind(')') else { continue };
        let fields: Vec<&str> = stat[close + 1..].split_whitespace().collect();
        // fields[0] is field 3 (state) of proc(5).
        let field = |n: usize| fields.get(n - 3).and_then(|f| f.parse::<i64>().ok()).unwrap_or(0);
        if field(5) != pgid as i64 {
            continue;
        }
        ticks += (field(14) + field(15) + field(16) + field(17)).max(0) as u64;
        pages += field(24).max(0) as u64;
    }
    (ticks, pages)
}

fn set_rlimit(resource: libc::__rlimit_resource_t, soft: u64, hard: u64) -> std::io::Result<()> {
    let lim = libc::rlimit {
        rlim_cur: soft,
        rlim_max: hard,
    };
    // SAFETY: `lim` is a valid rlimit struct.
    if unsafe { libc::setrlimit(resource, &lim) } != 0 {
        return Err(std::io::Error::last_os_error());
    }
    Ok(())
}

/// Runs `argv` to completion or until a limit is hit. The wall-clock cap
/// guards against runs that sleep instead of consuming CPU.
pub fn run_limited(
    argv: &[String],
    limits: &ProcLimits,
    wall_cap: Duration,
    log_dir: &Path,
) -> std::io::Result<ProcOutcome> {
    std::fs::create_dir_all(log_dir)?;
    let out_path = log_dir.join("stdout.txt");
    let err_path = log_dir.join("stderr.txt");
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(File::create(&out_path)?)
        .stderr(File::create(&err_path)?);
    // The poller enforces the exact limit; the rlimit is a backstop one second later.
    let cpu_soft = limits.cpu_s.ceil().max(1.0) as u64 + 1;
    let mem_bytes = limits.mem_mb.saturating_mul(1024 * 1024);
    let cores = limits.cores.clone();
    // SAFETY: the closure only calls async-signal-safe libc functions.
    unsafe {
        cmd.pre_exec(move || {
            if libc::setpgid(0, 0) != 0 {
                return Err(std::io::Error::last_os_error());
            }
            set_rlimit(libc::RLIMIT_CPU, cpu_soft, cpu_soft + 1)?;
            set_rlimit(libc::RLIMIT_AS, mem_bytes, mem_bytes)?;
            set_rlimit(libc::RLIMIT_CORE, 0, 0)?;
            if !cores.is_empty() {
                let mut set: libc::cpu_set_t = std::mem::zeroed();
                for &c in &cores {
                    libc::CPU_SET(c, &mut set);
                }
                // Pinning is best effort; a restricted cpuset may reject it.
                libc::sched_setaffinity(0, std::mem::size_of::<libc::cpu_set_t>(), &set);
            }
            Ok(())
        });
    }
    let start = Instant::now();
    let child = cmd.spawn()?;
    let pid = child.id() as i32;
    let tps = ticks_per_second();
    let page = page_mb();
    let mut peak_pages = 0u64;
    let mut polled_ticks = 0u64;
    let mut killed: Option<Termination> = None;
    let mut status = 0;
    // SAFETY: a zeroed rusage is a valid out-parameter.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    loop {
        // SAFETY: `pid` is our child; status and usage are valid pointers.
        let r = unsafe { libc::wait4(pid, &mut status, libc::WNOHANG, &mut usage) };
        if r == pid {
            break;
        }
        if r < 0 {
            let e = std::io::Error::last_os_error();
            if e.kind() != std::io::ErrorKind::Interrupted {
                return Err(e);
            }
        }
        let (ticks, pages) = group_usage(pid);
        polled_ticks = polled_ticks.max(ticks);
        peak_pages = peak_pages.max(pages);
        if killed.is_none() {
            let verdict = if abort_requested() {
                Some(Termination::Aborted)
            } else if polled_ticks as f64 / tps >= limits.cpu_s {
                Some(Termination::CpuLimit)
            } else if pages as f64 * page >= limits.mem_mb as f64 {
                Some(Termination::MemLimit)
            } else if start.elapsed() >= wall_cap {
                Some(Termination::WallLimit)
            } else {
                None
            };
            if let Some(t) = verdict {
                killed = Some(t);
                // SAFETY: signalling our own process group.
                unsafe { libc::killpg(pid, libc::SIGKILL) };
            }
        }
        std::thread::sleep(POLL);
    }
    let wall = start.elapsed().as_secs_f64();
    // Reap anything the run left behind in its group.
    // SAFETY: signalling our own process group; ESRCH is harmless.
    unsafe { libc::killpg(pid, libc::SIGKILL) };
    let tv = |t: libc::timeval| t.tv_sec as f64 + t.tv_usec as f64 / 1e6;
    let cpu = (tv(usage.ru_utime) + tv(usage.ru_stime)).max(polled_ticks as f64 / tps);
    let mem = (usage.ru_maxrss as f64 / 1024.0).max(peak_pages as f64 * page);
    let termination = match killed {
        Some(t) => t,
        None if libc::WIFEXITED(status) => Termination::Exited(libc::WEXITSTATUS(status)),
        None => {
            let sig = libc::WTERMSIG(status);
            if sig == libc::SIGXCPU || (sig == libc::SIGKILL && cpu >= limits.cpu_s) {
                Termination::CpuLimit
            } else {
                Termination::Signaled(sig)
            }
        }
    };
    Ok(ProcOutcome {
        termination,
        cpu_time_s: cpu,
        wall_time_s: wall,
        mem_peak_mb: mem,
        stdout: std::fs::read_to_string(&out_path).unwrap_or_default(),
        stderr: std::fs::read_to_string(&err_path).unwrap_or_default(),
    })
}
