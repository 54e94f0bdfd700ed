#!/usr/bin/env python3
"""
Dashboard Launcher Script
Checks dashboard dependencies, then launches the retrieval report dashboard
"""

import argparse
import os
import subprocess
import sys

REQUIRED_PACKAGES = ["streamlit", "plotly", "pandas", "pydantic", "numpy"]


def check_dependencies():
    """Return the required packages that cannot be imported"""
    missing_packages = []
    for package in REQUIRED_PACKAGES:
        try:
            __import__(package)
        except ImportError:
            missing_packages.append(package)
    return missing_packages


def install_dependencies():
    """Install missing dependencies"""
    print("Installing required packages...")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "dashboard_requirements.txt"])
        print("✅ Dependencies installed successfully!")
        return True
    except subprocess.CalledProcessError:
        print("❌ Failed to install dependencies")
        return False


def main():
    parser = argparse.ArgumentParser(description="Launch the retrieval report dashboard")
    parser.add_argument("--reports", default=os.getenv("SYMPOOL_REPORT_DIR", "output"), help="Directory with report JSON files")
    parser.add_argument("--port", type=int, default=8501)
    args = parser.parse_args()

    print("🚀 Retrieval Report Dashboard Launcher")
    print("=" * 40)

    if not os.path.exists("dashboard_requirements.txt"):
        print("❌ dashboard_requirements.txt not found!")
        print("Please make sure you're in the correct directory.")
        return

    missing = check_dependencies()
    if missing:
        print(f"⚠️  Missing packages: {', '.join(missing)}")
        if not install_dependencies():
            print("❌ Failed to install dependencies. Please install manually:")
            print("pip install -r dashboard_requirements.txt")
            return

    print("✅ All dependencies are available!")
    print(f"\n🌐 Serving reports from {args.reports}")
    print(f"📊 Dashboard will open in your browser at: http://localhost:{args.port}")
    print("🔄 Press Ctrl+C to stop the dashboard")
    print("\n" + "=" * 40)

    env = dict(os.environ, SYMPOOL_REPORT_DIR=args.reports)
    try:
        subprocess.run(
            [sys.executable, "-m", "streamlit", "run", "report_dashboard.py", f"--server.port={args.port}"],
            env=env,
        )
    except KeyboardInterrupt:
        print("\n🛑 Dashboard stopped by user")
    except Exception as e:
        print(f"❌ Error launching dashboard: {e}")


if __name__ == "__main__":
    main()
