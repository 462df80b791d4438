from zrsim.cli import main

main()
