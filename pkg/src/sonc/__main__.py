from sonc.cli import main

main()
