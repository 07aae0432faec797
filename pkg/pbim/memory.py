"""Run Memory — keeps an experiment's state and log across trials."""
from datetime import datetime
from typing import Dict, List


class RunMemory:
    """
    Maintains the experiment state throughout a run.
    Tracks: status, current trial, per-trial results, warnings, and the log.
    The log carries wall-clock timestamps, so it never feeds the report.
    """

    def __init__(self):
        self.name: str = ""
        self.started_at: str = ""
        self.status: str = "idle"
        self.trial: int = 0
        self.results: List[Dict] = []
        self.warnings: List[str] = []
        self.log: List[Dict[str, str]] = []

    def reset(self, name: str):
        """Reset memory for a new run."""
        self.__init__()
        self.name = name
        self.started_at = datetime.now().isoformat()
        self.status = "initialized"

    def add_log(self, phase: str, message: str):
        self.log.append({
            "timestamp": datetime.now().strftime("%H:%M:%S"),
            "phase": phase,
            "message": message,
        })
        if phase == "warn":
            self.warnings.append(message)

    def add_result(self, result: Dict):
        """Record one (variant, class, trial) outcome."""
        self.results.append(result)
