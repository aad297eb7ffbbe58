"""Backtrace-driven localization and pattern-based repair of Rust panics."""

from .catalog import FixPattern, MatchBinding, applicable_patterns, load_catalog, match_pattern
from .dep_graph import DependencyGraph, build_graph, candidate_elements, distance_to_seeds
from .localization import LocalizationConfig, SuspiciousLocation, confidence, rank_locations, suspicion
from .panic_report import PanicReport, RootCause, RootCauseKind, classify_root_cause, parse_backtrace, project_frames
from .patch_engine import CandidatePatch, apply_to_workspace, generate_patches, render_interpretation, synthesize
from .ranking import RankedPatch, emit_report, prioritize, similarity
from .source_model import ProjectModel, descend, load_project, locate_element
from .validation import ValidationOutcome, ValidationStatus, panic_detector, validate

__version__ = "0.1.0"
