"""
Run Log

Collects the non-fatal warnings and errors of a command so they can be
reported together once it finishes.
"""

from dataclasses import dataclass, field


@dataclass
class RunLog:
    """Container for warnings and errors raised while a command runs."""

    component: str = "Run"
    verbose: bool = False
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def _record(self, bucket: list[str], message: str, item: str | None) -> None:
        entry = f"[{item}] {message}" if item is not None else message
        bucket.append(entry)
        if self.verbose:
            print(f"[{self.component}] {entry}")

    def warn(self, message: str, item: str | None = None):
        self._record(self.warnings, message, item)

    def error(self, message: str, item: str | None = None):
        self._record(self.errors, message, item)

    def has_issues(self) -> bool:
        return bool(self.warnings or self.errors)

    def summary(self) -> str:
        lines = []
        if self.errors:
            lines.append(f"ERRORS ({len(self.errors)}):")
            for err in self.errors:
                lines.append(f"  ✗ {err}")
        if self.warnings:
            lines.append(f"WARNINGS ({len(self.warnings)}):")
            for warn in self.warnings:
                lines.append(f"  ⚠ {warn}")
        if not lines:
            lines.append("No issues found.")
        return "\n".join(lines)
