"""Line-delimited JSON waveform ingestion over TCP.

A thin transport: the same parser consumes the same lines whether they
come from a file or a socket, so both routes produce identical output.
"""

import socket

from .errors import ConfigError


class TcpIngest:
    """Accepts one sender and yields its newline-delimited records."""

    def __init__(self, port: int, host: str = "127.0.0.1"):
        try:
            self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            self._listener.bind((host, port))
            self._listener.listen(1)
        except OSError as exc:
            raise ConfigError(f"cannot bind {host}:{port}: {exc}") from exc

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()

    def lines(self):
        """Accept a connection and yield complete lines until it closes."""
        conn, _ = self._listener.accept()
        buf = b""
        with conn:
            while True:
                data = conn.recv(65536)
                if not data:
                    break
                buf += data
                while b"\n" in buf:
                    line, buf = buf.split(b"\n", 1)
                    yield line.decode("utf-8", errors="replace")
        if buf.strip():
            yield buf.decode("utf-8", errors="replace")

    def close(self):
        self._listener.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def iter_file_lines(path):
    """File twin of TcpIngest.lines for transport-equivalence runs."""
    with open(path) as fh:
        for line in fh:
            yield line.rstrip("\n")
