from .app import create_app, run_section6_demo

__all__ = ["create_app", "run_section6_demo"]
