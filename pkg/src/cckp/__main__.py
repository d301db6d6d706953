from cckp.harness.cli import main

main()
