import logging
import os
import tempfile
import unittest
from unittest.mock import patch

from pythonjsonlogger import jsonlogger

from app.utils.log_file_handler import BufferedFileLogHandler


def _record(message):
    return logging.LogRecord("test", logging.INFO, "", 0, message, None, None)


class TestBufferedFileLogHandler(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "app.log")

    def tearDown(self):
        self.tmp.cleanup()

    def _handler(self, capacity):
        handler = BufferedFileLogHandler(self.path, capacity=capacity)
        handler.setFormatter(jsonlogger.JsonFormatter(fmt="%(message)s"))
        return handler

    def test_flush_appends_logs_and_clears_buffer(self):
        """
        When the buffer reaches capacity the records are appended to the file
        as JSON lines and the buffer is cleared.
        """
        handler = self._handler(capacity=3)
        for i in range(3):
            handler.emit(_record(f"Message {i + 1}"))

        with open(self.path, encoding="utf-8") as log_file:
            content = log_file.read()
        self.assertEqual(
            content,
            '{"message": "Message 1"}\n{"message": "Message 2"}\n'
            '{"message": "Message 3"}\n',
        )
        self.assertEqual(handler.buffer, [])

    def test_emit_does_not_trigger_flush_until_capacity_reached(self):
        handler = self._handler(capacity=5)
        for i in range(3):
            handler.emit(_record(f"Msg {i + 1}"))

        self.assertEqual(len(handler.buffer), 3)
        self.assertFalse(os.path.exists(self.path))

        handler.flush()
        self.assertEqual(handler.buffer, [])
        with open(self.path, encoding="utf-8") as log_file:
            self.assertEqual(len(log_file.read().splitlines()), 3)

    def test_successive_flushes_append(self):
        handler = self._handler(capacity=1)
        handler.emit(_record("first"))
        handler.emit(_record("second"))
        with open(self.path, encoding="utf-8") as log_file:
            self.assertEqual(len(log_file.read().splitlines()), 2)

    def test_close_flushes_pending_records(self):
        handler = self._handler(capacity=10)
        handler.emit(_record("pending"))
        handler.close()
        with open(self.path, encoding="utf-8") as log_file:
            self.assertIn("pending", log_file.read())

    def test_failed_write_keeps_records(self):
        handler = self._handler(capacity=10)
        handler.emit(_record("kept"))
        with patch("builtins.open", side_effect=OSError("disk full")):
            handler.flush()
        self.assertEqual(len(handler.buffer), 1)

    def test_flush_with_empty_buffer_writes_nothing(self):
        handler = self._handler(capacity=2)
        handler.flush()
        self.assertFalse(os.path.exists(self.path))


if __name__ == "__main__":
    unittest.main()
