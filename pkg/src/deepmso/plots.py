"""Figures for single runs and on/off comparisons, rendered straight to files."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

JOINTS = ("q1", "q2")


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_tracking(log, path, title="Trajectory tracking"):
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    for i, ax in enumerate(axes):
        ax.plot(log.t, log.x_d[:, i], "k--", lw=1.2, label="desired")
        ax.plot(log.t, log.x[:, i], lw=1.2, label="actual")
        ax.set_ylabel(f"{JOINTS[i]} [rad]")
        ax.grid(alpha=0.3)
    axes[0].set_title(title)
    axes[0].legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("time [s]")
    _save(fig, path)


def plot_error(log, path, title="Tracking error"):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for i in range(2):
        ax.plot(log.t, log.e_r[:, i], lw=1.0, label=f"error {i + 1}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("joint error [rad]")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_torque(log, path, title="Control torque"):
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for i in range(log.u.shape[1]):
        ax.plot(log.t, log.u[:, i], lw=1.0, label=f"tau{i + 1}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("torque [N m]")
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_compare(log_on, log_off, path):
    fig, axes = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    for i, ax in enumerate(axes):
        ax.plot(log_on.t, log_on.x_d[:, i], "k--", lw=1.0, label="desired")
        ax.plot(log_off.t, log_off.x[:, i], lw=1.0, label="network off")
        ax.plot(log_on.t, log_on.x[:, i], lw=1.0, label="network on")
        ax.set_ylabel(f"{JOINTS[i]} [rad]")
        ax.grid(alpha=0.3)
    axes[0].legend(loc="upper right", fontsize=8)
    axes[-1].set_xlabel("time [s]")
    _save(fig, path)


def render_run(log, outdir, label=""):
    """Write tracking, error and torque figures into ``outdir``; returns the file names."""
    suffix = f" ({label})" if label else ""
    names = {"tracking": "tracking.png", "error": "error.png", "torque": "torque.png"}
    plot_tracking(log, outdir / names["tracking"], "Trajectory tracking" + suffix)
    plot_error(log, outdir / names["error"], "Tracking error" + suffix)
    plot_torque(log, outdir / names["torque"], "Control torque" + suffix)
    return sorted(names.values())
