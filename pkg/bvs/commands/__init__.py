"""Program commands."""
