import glob
import os
import shutil

SOURCE_DIRECTORY = "toruskam"
DOCS_DIRECTORY = "mkdocs"


def create_directory(path):
    """Create a directory if it doesn't exist."""
    os.makedirs(path, exist_ok=True)


def get_python_files(directory):
    """Get all Python files in the package, excluding __init__.py files."""
    py_files = glob.glob(os.path.join(directory, "**", "*.py"), recursive=True)
    return [file for file in py_files if "__init__.py" not in file]


def generate_documentation_file(file_path):
    """Write an mkdocstrings stub for one module, e.g. mkdocs/toruskam/kam/engine.md."""
    file_path_splits = file_path.split(os.sep)

    docs_folder = os.path.join(DOCS_DIRECTORY, *file_path_splits[:-1])
    create_directory(docs_folder)

    file_name = file_path_splits[-1].replace(".py", ".md")
    new_docs_file = os.path.join(docs_folder, file_name)

    module = ".".join(file_path_splits).removesuffix(".py")
    with open(new_docs_file, "w") as f:
        f.write(f":::{module}\n")


def copy_guides():
    """Copy the hand-written guides next to the generated API pages."""
    create_directory(DOCS_DIRECTORY)
    shutil.copytree("docs", DOCS_DIRECTORY, dirs_exist_ok=True)


def main():
    """Generate API pages for every module and copy the guides."""
    python_files = get_python_files(SOURCE_DIRECTORY)
    for file in python_files:
        generate_documentation_file(file)
    copy_guides()

    print(f"Documentation generated for {len(python_files)} Python files.")


if __name__ == "__main__":
    main()
