import logging
import threading


class BufferedFileLogHandler(logging.Handler):
    """
    A logging handler that buffers log records and, when flushed,
    appends the aggregated records to a log file.
    """

    def __init__(self, path: str, capacity: int = 10, *args, **kwargs):
        """
        Args:
            path (str): The file the records are appended to.
            capacity (int): Number of log messages to buffer before auto-flushing.
        """
        super().__init__(*args, **kwargs)
        self.path = path
        self.capacity = capacity
        self.buffer = []
        self._buffer_lock = threading.Lock()

    def emit(self, record):
        try:
            msg = self.format(record)
            with self._buffer_lock:
                self.buffer.append(msg)
                full = len(self.buffer) >= self.capacity
            if full:
                self.flush()
        except Exception:
            self.handleError(record)

    def flush(self):
        with self._buffer_lock:
            if not self.buffer:
                return
            pending, self.buffer = self.buffer, []
        try:
            with open(self.path, "a", encoding="utf-8") as log_file:
                log_file.write("\n".join(pending) + "\n")
        except OSError:
            # Keep the records for the next attempt.
            with self._buffer_lock:
                self.buffer = pending + self.buffer

    def close(self):
        self.flush()
        super().close()
