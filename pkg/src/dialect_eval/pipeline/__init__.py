"""Run orchestration: stages, logs, aggregation, review service."""
